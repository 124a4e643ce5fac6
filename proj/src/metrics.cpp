#include "seagrid/metrics.hpp"

#include "seagrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace seagrid {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : n_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    if (num_classes < 1) throw DataError("confusion matrix needs at least one class");
}

void ConfusionMatrix::accumulate(ClassId truth, ClassId pred) { ++at(truth, pred); }

std::int64_t& ConfusionMatrix::at(ClassId truth, ClassId pred) {
    if (truth < 0 || truth >= n_ || pred < 0 || pred >= n_) {
        throw DataError("class id out of range: truth " + std::to_string(truth) + ", pred " + std::to_string(pred) +
                        " (classes: " + std::to_string(n_) + ")");
    }
    return counts_[static_cast<std::size_t>(truth) * n_ + pred];
}

std::int64_t ConfusionMatrix::at(ClassId truth, ClassId pred) const {
    return const_cast<ConfusionMatrix&>(*this).at(truth, pred);
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

std::int64_t ConfusionMatrix::support(ClassId c) const {
    std::int64_t s = 0;
    for (int p = 0; p < n_; ++p) s += at(c, p);
    return s;
}

std::int64_t ConfusionMatrix::predicted(ClassId c) const {
    std::int64_t s = 0;
    for (int t = 0; t < n_; ++t) s += at(t, c);
    return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.n_ != n_) throw DataError("cannot merge confusion matrices of different size");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

double f1_score(double precision, double recall) {
    const double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
    std::vector<ClassMetrics> out(static_cast<std::size_t>(cm.num_classes()));
    for (int c = 0; c < cm.num_classes(); ++c) {
        auto& m = out[static_cast<std::size_t>(c)];
        const auto tp = static_cast<double>(cm.at(c, c));
        const auto predicted = static_cast<double>(cm.predicted(c));
        m.support = cm.support(c);
        m.precision = predicted > 0 ? tp / predicted : 0.0;
        m.recall = m.support > 0 ? tp / static_cast<double>(m.support) : 0.0;
        m.f1 = f1_score(m.precision, m.recall);
    }
    return out;
}

double overall_f1(std::span<const double> f1s, std::span<const std::int64_t> supports) {
    if (f1s.size() != supports.size()) throw DataError("overall_f1: size mismatch");
    double num = 0.0;
    std::int64_t total = 0;
    for (std::size_t i = 0; i < f1s.size(); ++i) {
        num += f1s[i] * static_cast<double>(supports[i]);
        total += supports[i];
    }
    if (total <= 0) throw DataError("overall_f1: zero total support");
    return num / static_cast<double>(total);
}

ConfusionMatrix collapse_classes(const ConfusionMatrix& cm, std::span<const int> mapping, int num_out) {
    if (static_cast<int>(mapping.size()) != cm.num_classes()) throw DataError("collapse: mapping size mismatch");
    ConfusionMatrix out(num_out);
    for (int t = 0; t < cm.num_classes(); ++t) {
        for (int p = 0; p < cm.num_classes(); ++p) out.at(mapping[t], mapping[p]) += cm.at(t, p);
    }
    return out;
}

ConfusionMatrix collapse_binary(const ConfusionMatrix& cm, std::span<const ClassId> seagrass_ids) {
    if (seagrass_ids.empty()) throw DataError("collapse_binary: no seagrass classes given");
    std::vector<int> mapping(static_cast<std::size_t>(cm.num_classes()), 0);
    for (ClassId id : seagrass_ids) {
        if (id <= 0 || id >= cm.num_classes()) throw DataError("collapse_binary: invalid seagrass id " + std::to_string(id));
        mapping[static_cast<std::size_t>(id)] = 1;
    }
    return collapse_classes(cm, mapping, 2);
}

namespace {

double pct(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

}  // namespace

MetricReport make_report(const ConfusionMatrix& cm, std::vector<std::string> class_names) {
    if (static_cast<int>(class_names.size()) != cm.num_classes()) {
        throw DataError("report: " + std::to_string(class_names.size()) + " names for " +
                        std::to_string(cm.num_classes()) + " classes");
    }
    MetricReport r;
    r.class_names = std::move(class_names);
    r.confusion = cm;
    std::vector<double> f1s;
    for (const auto& m : per_class_metrics(cm)) {
        r.precision.push_back(pct(m.precision));
        r.recall.push_back(pct(m.recall));
        r.f1.push_back(pct(m.f1));
        r.support.push_back(m.support);
        f1s.push_back(m.f1);
    }
    r.overall_f1 = pct(overall_f1(f1s, r.support));
    return r;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json j;
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t i = 0; i < report.class_names.size(); ++i) {
        classes.push_back({{"name", report.class_names[i]},
                           {"precision", report.precision[i]},
                           {"recall", report.recall[i]},
                           {"f1", report.f1[i]},
                           {"support", report.support[i]}});
    }
    j["classes"] = std::move(classes);
    j["overall_f1"] = report.overall_f1;
    nlohmann::json cm = nlohmann::json::array();
    for (int t = 0; t < report.confusion.num_classes(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < report.confusion.num_classes(); ++p) row.push_back(report.confusion.at(t, p));
        cm.push_back(std::move(row));
    }
    j["confusion"] = std::move(cm);
    j["total"] = report.confusion.total();
    return j.dump(2) + "\n";
}

std::string report_to_table(const MetricReport& report) {
    std::size_t width = 7;
    for (const auto& n : report.class_names) width = std::max(width, n.size());
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-*s %8s %8s %8s %9s\n", static_cast<int>(width), "Class", "Prec.", "Recall", "F1",
                  "Support");
    out << buf;
    for (std::size_t i = 0; i < report.class_names.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-*s %8.2f %8.2f %8.2f %9lld\n", static_cast<int>(width),
                      report.class_names[i].c_str(), report.precision[i], report.recall[i], report.f1[i],
                      static_cast<long long>(report.support[i]));
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-*s %8s %8s %8.2f %9lld\n", static_cast<int>(width), "Overall", "", "",
                  report.overall_f1, static_cast<long long>(report.confusion.total()));
    out << buf;
    return out.str();
}

}  // namespace seagrid
