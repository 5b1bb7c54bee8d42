#include "fsnt/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fsnt/error.hpp"

namespace fsnt {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'F', 'S', 'N', 'T'};

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void reals(const std::vector<double>& v) {
        u64(v.size());
        for (const double x : v) f64(x);
    }
    void matrix(const Matrix& m) {
        u64(m.rows);
        u64(m.cols);
        for (const double x : m.data) f64(x);
    }
    void schema(const FeatureSchema& s) {
        u32(static_cast<std::uint32_t>(s.count()));
        for (const auto& n : s.names()) str(n);
    }
    void tree(const Tree& t) {
        u64(t.nodes.size());
        for (const auto& n : t.nodes) {
            i32(n.feature);
            f64(n.threshold);
            i32(n.left);
            i32(n.right);
            for (const double v : n.value) f64(v);
        }
    }

    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const auto n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::vector<double> reals() {
        const auto n = count(8);
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    Matrix matrix() {
        const auto rows = u64();
        const auto cols = u64();
        if (cols != 0 && rows > remaining() / 8 / cols) corrupt("matrix size");
        Matrix m(rows, cols);
        for (auto& x : m.data) x = f64();
        return m;
    }
    FeatureSchema schema() {
        const auto n = u32();
        if (n > remaining() / 4) corrupt("schema size");
        std::vector<std::string> names(n);
        for (auto& s : names) s = str();
        try {
            return FeatureSchema(std::move(names));
        } catch (const Error&) {
            corrupt("duplicate feature names");
        }
    }
    Tree tree() {
        const auto n = count(44);
        Tree t;
        t.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& node = t.nodes[i];
            node.feature = i32();
            node.threshold = f64();
            node.left = i32();
            node.right = i32();
            for (auto& v : node.value) v = f64();
            if (node.feature >= 0) {
                // Children always follow their parent, which also rules out cycles.
                const auto lo = static_cast<std::int64_t>(i);
                if (node.left <= lo || node.right <= lo || static_cast<std::size_t>(node.left) >= n ||
                    static_cast<std::size_t>(node.right) >= n) {
                    corrupt("tree node links");
                }
            }
        }
        if (n == 0) corrupt("empty tree");
        return t;
    }

    std::size_t count(std::size_t element_bytes) {
        const auto n = u64();
        if (n > remaining() / element_bytes) corrupt("element count");
        return static_cast<std::size_t>(n);
    }
    std::size_t remaining() const { return size_ - pos_; }
    [[noreturn]] static void corrupt(const std::string& what) {
        throw Error(ErrorCode::CorruptFile, what);
    }

private:
    void need(std::size_t n) const {
        if (n > size_ - pos_) corrupt("unexpected end of model data");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

void write_pca(Writer& w, const PcaModel& p) {
    w.schema(p.input_schema);
    w.reals(p.means);
    w.matrix(p.components);
    w.reals(p.eigenvalues);
    w.reals(p.residual_eigenvalues);
}

PcaModel read_pca(Reader& r) {
    PcaModel p;
    p.input_schema = r.schema();
    p.means = r.reals();
    p.components = r.matrix();
    p.eigenvalues = r.reals();
    p.residual_eigenvalues = r.reals();
    if (p.means.size() != p.input_schema.count() || p.components.cols != p.means.size() ||
        p.eigenvalues.size() != p.components.rows) {
        Reader::corrupt("PCA block dimensions");
    }
    return p;
}

void write_params(Writer& w, const ModelParameters& params) {
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LogisticParams> || std::is_same_v<T, SvmParams>) {
                w.matrix(p.weights);
                w.reals(p.bias);
            } else if constexpr (std::is_same_v<T, NaiveBayesParams>) {
                for (const double v : p.log_priors) w.f64(v);
                w.matrix(p.means);
                w.matrix(p.variances);
            } else if constexpr (std::is_same_v<T, KnnParams>) {
                w.u64(p.k);
                w.matrix(p.points);
                w.u64(p.labels.size());
                for (const auto l : p.labels) w.u8(static_cast<std::uint8_t>(l));
            } else if constexpr (std::is_same_v<T, TreeParams>) {
                w.tree(p.tree);
            } else if constexpr (std::is_same_v<T, ForestParams>) {
                w.u64(p.trees.size());
                for (const auto& t : p.trees) w.tree(t);
            } else if constexpr (std::is_same_v<T, AdaBoostParams>) {
                w.u64(p.stumps.size());
                for (std::size_t i = 0; i < p.stumps.size(); ++i) {
                    w.f64(p.alphas[i]);
                    w.tree(p.stumps[i]);
                }
            } else if constexpr (std::is_same_v<T, GbtParams>) {
                for (const double v : p.initial_scores) w.f64(v);
                w.f64(p.learning_rate);
                w.u64(p.rounds.size());
                for (const auto& round : p.rounds)
                    for (const auto& t : round) w.tree(t);
            }
        },
        params);
}

ModelParameters read_params(Reader& r, EstimatorKind kind) {
    auto linear = [&](auto p) {
        p.weights = r.matrix();
        p.bias = r.reals();
        if (p.weights.rows != kClassCount || p.bias.size() != kClassCount) Reader::corrupt("linear block");
        return p;
    };
    switch (kind) {
        case EstimatorKind::LR: return linear(LogisticParams{});
        case EstimatorKind::SVM: return linear(SvmParams{});
        case EstimatorKind::NB: {
            NaiveBayesParams p;
            for (auto& v : p.log_priors) v = r.f64();
            p.means = r.matrix();
            p.variances = r.matrix();
            if (p.means.rows != kClassCount || p.variances.rows != kClassCount ||
                p.means.cols != p.variances.cols) {
                Reader::corrupt("naive bayes block");
            }
            return p;
        }
        case EstimatorKind::KNN: {
            KnnParams p;
            p.k = r.u64();
            p.points = r.matrix();
            const auto n = r.count(1);
            if (n != p.points.rows || p.k == 0) Reader::corrupt("knn block");
            p.labels.resize(n);
            for (auto& l : p.labels) {
                const auto id = r.u8();
                if (id >= kClassCount) Reader::corrupt("knn label");
                l = static_cast<ClassLabel>(id);
            }
            return p;
        }
        case EstimatorKind::DT: return TreeParams{r.tree()};
        case EstimatorKind::RF: {
            ForestParams p;
            p.trees.resize(r.count(8));
            for (auto& t : p.trees) t = r.tree();
            return p;
        }
        case EstimatorKind::ADABOOST: {
            AdaBoostParams p;
            const auto n = r.count(8);
            for (std::size_t i = 0; i < n; ++i) {
                p.alphas.push_back(r.f64());
                p.stumps.push_back(r.tree());
            }
            return p;
        }
        case EstimatorKind::GBT: {
            GbtParams p;
            for (auto& v : p.initial_scores) v = r.f64();
            p.learning_rate = r.f64();
            p.rounds.resize(r.count(8));
            for (auto& round : p.rounds)
                for (auto& t : round) t = r.tree();
            return p;
        }
    }
    Reader::corrupt("estimator kind");
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    while (n > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        crc = crc32(crc, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const TrainedModel& m) {
    Writer w;
    for (const auto b : kMagic) w.u8(b);
    w.u32(kModelFormatVersion);
    w.u8(static_cast<std::uint8_t>(m.kind()));
    w.u64(m.spec().seed);
    w.u32(static_cast<std::uint32_t>(m.spec().hyperparameters.size()));
    for (const auto& [k, v] : m.spec().hyperparameters) {
        w.str(k);
        w.f64(v);
    }
    w.u32(static_cast<std::uint32_t>(kClassCount));

    const auto& pre = m.preprocessing();
    w.schema(pre.input_schema);
    w.u8(pre.standardizer.has_value());
    if (pre.standardizer) {
        w.schema(pre.standardizer->schema);
        w.reals(pre.standardizer->means);
        w.reals(pre.standardizer->stds);
    }
    w.u8(pre.pca.has_value());
    if (pre.pca) write_pca(w, *pre.pca);

    const auto& meta = m.metadata();
    w.f64(meta.fit_seconds);
    w.u64(meta.train_rows);
    w.u8(meta.converged);
    w.u8(meta.evaluation.has_value());
    if (meta.evaluation) {
        w.f64(meta.evaluation->accuracy);
        w.f64(meta.evaluation->macro_auc);
        w.f64(meta.evaluation->seconds);
    }

    write_params(w, m.parameters());
    auto& bytes = w.bytes();
    w.u32(crc_of(bytes.data(), bytes.size()));
    return std::move(bytes);
}

TrainedModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kMagic.size() + 4 + 4) Reader::corrupt("file too short");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) Reader::corrupt("bad magic");
    {
        Reader header(bytes.data() + 4, 4);
        const auto version = header.u32();
        if (version != kModelFormatVersion) {
            throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version) +
                                                        ", expected " + std::to_string(kModelFormatVersion));
        }
    }
    const std::size_t body = bytes.size() - 4;
    Reader tail(bytes.data() + body, 4);
    if (tail.u32() != crc_of(bytes.data(), body)) Reader::corrupt("checksum mismatch");

    Reader r(bytes.data() + 8, body - 8);
    const auto kind_id = r.u8();
    if (kind_id >= kAllKinds.size()) Reader::corrupt("estimator kind");
    EstimatorSpec spec;
    spec.kind = static_cast<EstimatorKind>(kind_id);
    spec.seed = r.u64();
    const auto n_hp = r.u32();
    for (std::uint32_t i = 0; i < n_hp; ++i) {
        auto key = r.str();
        spec.hyperparameters[key] = r.f64();
    }
    if (r.u32() != kClassCount) Reader::corrupt("class count");

    Preprocessing pre;
    pre.input_schema = r.schema();
    if (r.u8()) {
        StandardizationParams s;
        s.schema = r.schema();
        s.means = r.reals();
        s.stds = r.reals();
        if (s.means.size() != s.schema.count() || s.stds.size() != s.schema.count()) {
            Reader::corrupt("standardizer block");
        }
        pre.standardizer = std::move(s);
    }
    if (r.u8()) pre.pca = read_pca(r);

    ModelMetadata meta;
    meta.fit_seconds = r.f64();
    meta.train_rows = r.u64();
    meta.converged = r.u8() != 0;
    if (r.u8()) {
        StoredEvaluation e;
        e.accuracy = r.f64();
        e.macro_auc = r.f64();
        e.seconds = r.f64();
        meta.evaluation = e;
    }
    auto params = read_params(r, spec.kind);
    if (r.remaining() != 0) Reader::corrupt("trailing bytes");
    return TrainedModel(std::move(spec), std::move(pre), std::move(params), std::move(meta));
}

void save_model(const TrainedModel& m, const std::string& path) {
    const auto bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for '" + path + "'");
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

std::uint64_t model_fingerprint(const TrainedModel& m) {
    const auto bytes = serialize_model(m);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace fsnt
