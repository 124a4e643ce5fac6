#pragma once

#include "seagrid/image.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seagrid {

/// counts[truth][pred].
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int num_classes);

    int num_classes() const { return n_; }
    void accumulate(ClassId truth, ClassId pred);
    std::int64_t at(ClassId truth, ClassId pred) const;
    std::int64_t& at(ClassId truth, ClassId pred);
    std::int64_t total() const;
    std::int64_t support(ClassId c) const;     // row sum
    std::int64_t predicted(ClassId c) const;   // column sum
    /// Entrywise sum (parallel reduction).
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    int n_;
    std::vector<std::int64_t> counts_;
};

struct ClassMetrics {
    double precision = 0.0;  // fractions in [0,1]
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

/// 2PR/(P+R); 0 when P+R = 0. Works on any common scale (fractions or percent).
double f1_score(double precision, double recall);

/// Zero denominators give 0.
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);

/// Support-weighted mean of per-class F1. Throws DataError when the total support is 0.
double overall_f1(std::span<const double> f1s, std::span<const std::int64_t> supports);

/// Maps class c to mapping[c] and re-counts into `num_out` classes.
ConfusionMatrix collapse_classes(const ConfusionMatrix& cm, std::span<const int> mapping, int num_out);
/// Background vs Seagrass: ids in `seagrass_ids` become class 1, everything else class 0.
ConfusionMatrix collapse_binary(const ConfusionMatrix& cm, std::span<const ClassId> seagrass_ids);

/// Percent values rounded to two decimals.
struct MetricReport {
    std::vector<std::string> class_names;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    std::vector<std::int64_t> support;
    double overall_f1 = 0.0;
    ConfusionMatrix confusion{1};
};

MetricReport make_report(const ConfusionMatrix& cm, std::vector<std::string> class_names);
std::string report_to_json(const MetricReport& report);
/// Aligned table: Class | Prec. | Recall | F1 | Support, then an Overall row.
std::string report_to_table(const MetricReport& report);

}  // namespace seagrid
