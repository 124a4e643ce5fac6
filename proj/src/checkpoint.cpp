#include "seagrid/checkpoint.hpp"

#include "seagrid/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

using nlohmann::json;

namespace seagrid {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'A', 'G', 'R', 'I', 'D', '\0'};

template <typename T>
void put(std::string& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

    std::string take(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw DataError("checkpoint is truncated");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

void put_tensor(std::string& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) put(out, m(r, c));
    }
}

Matrix get_tensor(Reader& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = in.get<double>();
    }
    return m;
}

json shape(const Matrix& m) { return json::array({m.rows(), m.cols()}); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    json h;
    h["classes"] = ckpt.classes;
    h["grid"] = json::array({ckpt.grid.rows, ckpt.grid.cols});
    h["engine"] = ckpt.engine;
    h["encoder"] = ckpt.encoder;
    h["input_size"] = ckpt.model.input_size;
    json layers = json::array();
    for (const auto& l : ckpt.model.backbone.layers) {
        layers.push_back({{"in", l.in_dim()}, {"out", l.out_dim()}, {"relu", l.relu}});
    }
    h["backbone"] = std::move(layers);
    const auto& head = ckpt.model.head;
    h["head"] = {{"w1", shape(head.w1)}, {"w2", shape(head.w2)}, {"dropout", head.dropout_p}};
    if (ckpt.adam) {
        const auto& a = *ckpt.adam;
        json shapes = json::array();
        for (const auto& m : a.m) shapes.push_back(shape(m));
        h["adam"] = {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps},
                     {"step", a.step}, {"shapes", std::move(shapes)}};
    }
    const std::string header = h.dump();

    std::string out(kMagic, sizeof kMagic);
    put(out, kCheckpointVersion);
    put(out, static_cast<std::uint64_t>(header.size()));
    out += header;
    for (const auto* p : ckpt.model.parameters()) put_tensor(out, *p);
    if (ckpt.adam) {
        for (std::size_t i = 0; i < ckpt.adam->m.size(); ++i) {
            put_tensor(out, ckpt.adam->m[i]);
            put_tensor(out, ckpt.adam->v[i]);
        }
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    Reader in(bytes);
    if (in.take(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw DataError("not a seagrid checkpoint");
    const auto version = in.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto header_len = in.get<std::uint64_t>();
    Checkpoint ckpt;
    try {
        const json h = json::parse(in.take(header_len));
        ckpt.classes = h.at("classes").get<std::vector<std::string>>();
        ckpt.grid = {h.at("grid").at(0).get<int>(), h.at("grid").at(1).get<int>()};
        ckpt.engine = h.at("engine").get<std::string>();
        ckpt.encoder = h.at("encoder").get<std::string>();
        ckpt.model.input_size = h.at("input_size").get<int>();
        for (const auto& l : h.at("backbone")) {
            DenseLayer layer;
            layer.relu = l.at("relu").get<bool>();
            layer.weight = get_tensor(in, l.at("in").get<int>(), l.at("out").get<int>());
            layer.bias = get_tensor(in, 1, l.at("out").get<int>());
            ckpt.model.backbone.layers.push_back(std::move(layer));
        }
        const auto& hd = h.at("head");
        const int d = hd.at("w1").at(0).get<int>(), width = hd.at("w1").at(1).get<int>();
        const int classes = hd.at("w2").at(1).get<int>();
        ckpt.model.head.dropout_p = hd.at("dropout").get<double>();
        ckpt.model.head.w1 = get_tensor(in, d, width);
        ckpt.model.head.b1 = get_tensor(in, 1, width);
        ckpt.model.head.w2 = get_tensor(in, width, classes);
        ckpt.model.head.b2 = get_tensor(in, 1, classes);
        if (h.contains("adam")) {
            const auto& a = h.at("adam");
            AdamState state(a.at("lr").get<double>());
            state.beta1 = a.at("beta1").get<double>();
            state.beta2 = a.at("beta2").get<double>();
            state.eps = a.at("eps").get<double>();
            state.step = a.at("step").get<std::int64_t>();
            for (const auto& s : a.at("shapes")) {
                const auto r = s.at(0).get<Eigen::Index>(), c = s.at(1).get<Eigen::Index>();
                state.m.push_back(get_tensor(in, r, c));
                state.v.push_back(get_tensor(in, r, c));
            }
            ckpt.adam = std::move(state);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint header: ") + e.what());
    }
    if (!in.done()) throw DataError("checkpoint has trailing bytes");
    if (static_cast<int>(ckpt.classes.size()) != ckpt.model.num_classes()) {
        throw DataError("checkpoint class list does not match the head");
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + file.string());
    const std::string bytes = serialize_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return deserialize_checkpoint(ss.str());
    } catch (const DataError& e) {
        throw DataError(file.string() + ": " + e.what());
    }
}

}  // namespace seagrid
