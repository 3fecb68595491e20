#include "mci/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mci {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw Error("cannot read " + path.string());
    }
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
}

namespace {

class Writer {
public:
    template <class T>
    void put(T value) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    template <class T>
    void put_array(std::span<const T> values) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
        bytes_.insert(bytes_.end(), p, p + values.size_bytes());
    }
    void put_tag(const char (&tag)[5]) { bytes_.insert(bytes_.end(), tag, tag + 4); }
    void put_bytes(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
    void put_string(const std::string& s) {
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }
    std::size_t size() const { return bytes_.size(); }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Bounds-checked cursor; failures name the section being read.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <class T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    template <class T>
    std::vector<T> get_array(std::size_t count, const char* what) {
        if (count > (bytes_.size() - pos_) / sizeof(T)) fail_truncated(what);
        std::vector<T> out(count);
        std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(T));
        pos_ += count * sizeof(T);
        return out;
    }
    std::span<const std::uint8_t> get_bytes(std::size_t count, const char* what) {
        need(count, what);
        auto s = bytes_.subspan(pos_, count);
        pos_ += count;
        return s;
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t count, const char* what) {
        if (count > bytes_.size() - pos_) fail_truncated(what);
    }
    [[noreturn]] void fail_truncated(const char* what) const {
        throw LoadError(std::string("truncated file while reading ") + what + " at byte offset " +
                        std::to_string(pos_));
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void check_offsets(std::span<const std::uint64_t> offsets, std::uint64_t total, const char* what) {
    if (offsets.front() != 0 || offsets.back() != total) {
        throw LoadError(std::string("index validation failed: ") + what + " offsets do not span the pool");
    }
    for (std::size_t i = 1; i < offsets.size(); ++i) {
        if (offsets[i] < offsets[i - 1]) {
            throw LoadError(std::string("index validation failed: ") + what + " offsets decrease at entry " +
                            std::to_string(i));
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// vecs
// ---------------------------------------------------------------------------

VecsKind vecs_kind_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".fvecs") return VecsKind::f32;
    if (ext == ".ivecs") return VecsKind::i32;
    if (ext == ".bvecs") return VecsKind::u8;
    throw InvalidArgument("cannot infer vecs element type from extension `" + ext + "`");
}

VecsMatrix read_vecs(const std::filesystem::path& path, std::optional<VecsKind> kind) {
    const VecsKind k = kind ? *kind : vecs_kind_from_path(path);
    const std::size_t elem = k == VecsKind::u8 ? 1 : 4;
    const auto bytes = read_file(path);
    VecsMatrix m;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) {
            throw ParseError("truncated record header at byte offset " + std::to_string(pos) + " in " + path.string());
        }
        std::int32_t dim = 0;
        std::memcpy(&dim, bytes.data() + pos, 4);
        if (dim <= 0) {
            throw ParseError("non-positive dimension " + std::to_string(dim) + " at byte offset " +
                             std::to_string(pos) + " in " + path.string());
        }
        if (m.rows == 0) {
            m.dim = static_cast<std::size_t>(dim);
        } else if (static_cast<std::size_t>(dim) != m.dim) {
            throw ParseError("inconsistent dimension " + std::to_string(dim) + " (expected " + std::to_string(m.dim) +
                             ") at byte offset " + std::to_string(pos) + " in " + path.string());
        }
        const std::size_t body = m.dim * elem;
        if (bytes.size() - pos - 4 < body) {
            throw ParseError("truncated record at byte offset " + std::to_string(pos) + " in " + path.string());
        }
        const std::uint8_t* p = bytes.data() + pos + 4;
        for (std::size_t i = 0; i < m.dim; ++i) {
            switch (k) {
                case VecsKind::f32: {
                    float v;
                    std::memcpy(&v, p + i * 4, 4);
                    m.values.push_back(v);
                    break;
                }
                case VecsKind::i32: {
                    std::int32_t v;
                    std::memcpy(&v, p + i * 4, 4);
                    m.values.push_back(static_cast<float>(v));
                    break;
                }
                case VecsKind::u8:
                    m.values.push_back(static_cast<float>(p[i]));
                    break;
            }
        }
        pos += 4 + body;
        ++m.rows;
    }
    return m;
}

Dataset load_vecs(const std::filesystem::path& path, std::optional<VecsKind> kind) {
    auto m = read_vecs(path, kind);
    if (m.rows == 0) throw ParseError(path.string() + " holds no records; a dataset needs n >= 1");
    return Dataset(m.dim, std::move(m.values));
}

std::vector<std::vector<std::int32_t>> load_ivecs(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    std::vector<std::vector<std::int32_t>> rows;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 4) throw ParseError("truncated record header at byte offset " + std::to_string(pos));
        std::int32_t dim = 0;
        std::memcpy(&dim, bytes.data() + pos, 4);
        if (dim < 0 || bytes.size() - pos - 4 < static_cast<std::size_t>(dim) * 4) {
            throw ParseError("truncated or malformed record at byte offset " + std::to_string(pos));
        }
        std::vector<std::int32_t> row(static_cast<std::size_t>(dim));
        std::memcpy(row.data(), bytes.data() + pos + 4, row.size() * 4);
        rows.push_back(std::move(row));
        pos += 4 + static_cast<std::size_t>(dim) * 4;
    }
    return rows;
}

void save_fvecs(const std::filesystem::path& path, std::span<const float> values, std::size_t dim) {
    if (dim == 0 || values.size() % dim != 0) throw DimensionError("fvecs payload is not a multiple of dim");
    Writer w;
    for (std::size_t i = 0; i < values.size(); i += dim) {
        w.put(static_cast<std::int32_t>(dim));
        w.put_array(values.subspan(i, dim));
    }
    write_file(path, w.take());
}

void save_fvecs(const std::filesystem::path& path, const Dataset& dataset) {
    save_fvecs(path, dataset.vectors(), dataset.dim());
}

void save_bvecs(const std::filesystem::path& path, std::span<const std::uint8_t> values, std::size_t dim) {
    if (dim == 0 || values.size() % dim != 0) throw DimensionError("bvecs payload is not a multiple of dim");
    Writer w;
    for (std::size_t i = 0; i < values.size(); i += dim) {
        w.put(static_cast<std::int32_t>(dim));
        w.put_bytes(values.subspan(i, dim));
    }
    write_file(path, w.take());
}

void save_ivecs(const std::filesystem::path& path, std::span<const std::vector<std::int32_t>> rows) {
    Writer w;
    for (const auto& row : rows) {
        w.put(static_cast<std::int32_t>(row.size()));
        w.put_array(std::span<const std::int32_t>(row));
    }
    write_file(path, w.take());
}

void save_knng_ivecs(const std::filesystem::path& path, const KnnGraph& graph) {
    std::vector<std::vector<std::int32_t>> rows(graph.size());
    for (std::size_t u = 0; u < graph.size(); ++u) {
        for (const auto& nb : graph.neighbors(static_cast<NodeId>(u))) rows[u].push_back(static_cast<std::int32_t>(nb.id));
    }
    save_ivecs(path, rows);
}

// ---------------------------------------------------------------------------
// Index
// ---------------------------------------------------------------------------

class IndexCodec {
public:
    static std::vector<std::uint8_t> encode(const CliqueIndex& source) {
        CliqueIndex index = source;
        index.compact();
        const std::size_t n = index.size();
        const std::size_t cc = index.clique_count();
        const std::uint64_t total = index.total_members();

        Writer w;
        w.put_tag("MCI1");
        w.put(static_cast<std::uint32_t>(n));
        w.put(index.k_prime_);
        w.put(index.tau_);
        w.put(static_cast<std::uint32_t>(cc));
        w.put(total);
        std::uint64_t off = 0;
        w.put(off);
        for (std::size_t c = 0; c < cc; ++c) {
            off += index.members(c).size();
            w.put(off);
        }
        for (std::size_t c = 0; c < cc; ++c) w.put_array(index.members(c));
        std::vector<std::uint8_t> kinds((cc + 7) / 8, 0);
        for (std::size_t c = 0; c < cc; ++c) {
            if (index.kind(c) == CliqueKind::pseudo) kinds[c >> 3] |= static_cast<std::uint8_t>(1U << (c & 7));
        }
        w.put_bytes(kinds);
        off = 0;
        w.put(off);
        for (std::size_t u = 0; u < n; ++u) {
            off += index.cliques_of(static_cast<NodeId>(u)).size();
            w.put(off);
        }
        for (std::size_t u = 0; u < n; ++u) w.put_array(index.cliques_of(static_cast<NodeId>(u)));

        const BuildMeta& meta = index.meta_;
        if (!meta.rounds.empty() || meta.pseudo_cliques != 0 || meta.supercenter_exclusions != 0 ||
            !meta.warnings.empty()) {
            nlohmann::json rounds = nlohmann::json::array();
            for (const auto& r : meta.rounds) {
                rounds.push_back({{"alpha", r.alpha},
                                  {"processed", r.processed},
                                  {"uncovered_after", r.uncovered_after},
                                  {"cliques_added", r.cliques_added},
                                  {"pseudo_added", r.pseudo_added}});
            }
            const std::string text = nlohmann::json{{"rounds", rounds},
                                                    {"pseudo_cliques", meta.pseudo_cliques},
                                                    {"supercenter_exclusions", meta.supercenter_exclusions},
                                                    {"warnings", meta.warnings}}
                                         .dump();
            w.put_tag("META");
            w.put(static_cast<std::uint64_t>(text.size()));
            w.put_string(text);
        }
        const auto deleted = index.deleted_ids();
        if (!deleted.empty()) {
            w.put_tag("DELS");
            w.put(static_cast<std::uint64_t>(deleted.size() * 4));
            w.put_array(std::span<const NodeId>(deleted));
        }
        return w.take();
    }

    static CliqueIndex decode(std::span<const std::uint8_t> bytes) {
        Reader r(bytes);
        const auto magic = r.get_bytes(4, "magic");
        if (std::memcmp(magic.data(), "MCI1", 4) != 0) {
            throw LoadError("bad magic: expected MCI1, found `" + std::string(magic.begin(), magic.end()) + "`");
        }
        const auto n = r.get<std::uint32_t>("header");
        const auto k_prime = r.get<std::uint32_t>("header");
        const auto tau = r.get<std::uint32_t>("header");
        const auto cc = r.get<std::uint32_t>("header");
        const auto total = r.get<std::uint64_t>("header");
        const auto offsets = r.get_array<std::uint64_t>(static_cast<std::size_t>(cc) + 1, "clique offsets");
        check_offsets(offsets, total, "clique");
        const auto pool = r.get_array<std::uint32_t>(total, "member pool");
        const auto kinds = r.get_bytes((cc + 7) / 8, "kind bitset");
        const auto node_offsets = r.get_array<std::uint64_t>(static_cast<std::size_t>(n) + 1, "node offsets");
        check_offsets(node_offsets, total, "node");
        const auto node_pool = r.get_array<std::uint32_t>(total, "node-to-clique pool");

        CliqueIndex index;
        index.k_prime_ = k_prime;
        index.tau_ = tau;
        index.members_ = RaggedArray::from_csr(offsets, pool);
        index.node_cliques_ = RaggedArray::from_csr(node_offsets, node_pool);
        index.kinds_.resize(cc);
        for (std::size_t c = 0; c < cc; ++c) {
            index.kinds_[c] = ((kinds[c >> 3] >> (c & 7)) & 1U) != 0 ? CliqueKind::pseudo : CliqueKind::mined;
        }
        index.live_.assign(n, 1);
        index.live_count_ = n;

        while (r.remaining() > 0) {
            const auto tag = r.get_bytes(4, "section tag");
            const auto len = r.get<std::uint64_t>("section length");
            const auto body = r.get_bytes(len, "section body");
            const std::string name(tag.begin(), tag.end());
            if (name == "META") {
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(body.begin(), body.end());
                    for (const auto& jr : j.at("rounds")) {
                        index.meta_.rounds.push_back({jr.at("alpha").get<double>(),
                                                      jr.at("processed").get<std::size_t>(),
                                                      jr.at("uncovered_after").get<std::size_t>(),
                                                      jr.at("cliques_added").get<std::size_t>(),
                                                      jr.at("pseudo_added").get<std::size_t>()});
                    }
                    index.meta_.pseudo_cliques = j.at("pseudo_cliques").get<std::size_t>();
                    index.meta_.supercenter_exclusions = j.at("supercenter_exclusions").get<std::size_t>();
                    index.meta_.warnings = j.at("warnings").get<std::vector<std::string>>();
                } catch (const nlohmann::json::exception& e) {
                    throw LoadError(std::string("malformed META section: ") + e.what());
                }
            } else if (name == "DELS") {
                if (len % 4 != 0) throw LoadError("malformed DELS section length");
                std::vector<NodeId> ids(len / 4);
                std::memcpy(ids.data(), body.data(), len);
                for (NodeId u : ids) {
                    if (u >= n || index.live_[u] == 0) throw LoadError("malformed DELS section: bad id " + std::to_string(u));
                    index.live_[u] = 0;
                    --index.live_count_;
                }
            } else {
                throw LoadError("unknown section `" + name + "` at byte offset " + std::to_string(r.pos() - 12 - len));
            }
        }
        try {
            index.validate();
        } catch (const LoadError&) {
            throw;
        } catch (const Error& e) {
            throw LoadError(e.what());
        }
        return index;
    }
};

std::vector<std::uint8_t> serialize_index(const CliqueIndex& index) { return IndexCodec::encode(index); }

CliqueIndex deserialize_index(std::span<const std::uint8_t> bytes) { return IndexCodec::decode(bytes); }

void save_index(const std::filesystem::path& path, const CliqueIndex& index) {
    write_file(path, serialize_index(index));
}

CliqueIndex load_index(const std::filesystem::path& path) { return deserialize_index(read_file(path)); }

// ---------------------------------------------------------------------------
// Workloads
// ---------------------------------------------------------------------------

namespace {

nlohmann::json predicate_to_json(const Predicate& p) {
    switch (p.kind()) {
        case Predicate::Kind::always_true: return {{"kind", "true"}};
        case Predicate::Kind::scalar_range: return {{"kind", "range"}, {"lo", p.lo()}, {"hi", p.hi()}};
        case Predicate::Kind::label_match: return {{"kind", "label"}, {"label", p.label_value()}};
        case Predicate::Kind::label_subset: {
            std::vector<std::uint32_t> l(p.label_values().begin(), p.label_values().end());
            return {{"kind", "labels"}, {"labels", l}};
        }
        default:
            throw InvalidArgument("predicate kind `" + p.to_string() + "` cannot be stored in a workload file");
    }
}

Predicate predicate_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "true") return Predicate::always_true();
    if (kind == "range") return Predicate::range(j.at("lo").get<float>(), j.at("hi").get<float>());
    if (kind == "label") return Predicate::label(j.at("label").get<std::uint32_t>());
    if (kind == "labels") return Predicate::labels_subset(j.at("labels").get<std::vector<std::uint32_t>>());
    throw LoadError("unknown predicate kind `" + kind + "` in workload file");
}

}  // namespace

void save_workload(const std::filesystem::path& path, const Workload& workload, std::size_t n) {
    const std::size_t nq = workload.queries.size();
    if (workload.ground_truth.size() != nq || workload.selectivities.size() != nq || workload.masks.size() != nq) {
        throw InvalidArgument("workload is missing ground truth, masks or selectivities");
    }
    if (workload.data_features.size() != n) throw InvalidArgument("workload features do not cover the dataset");

    FeatureKind fk = FeatureKind::none;
    for (const auto& f : workload.data_features) {
        const auto k = kind_of(f);
        if (k == FeatureKind::bytes) throw InvalidArgument("byte features cannot be stored in a workload file");
        if (fk == FeatureKind::none) fk = k;
        if (k != fk) throw InvalidArgument("workload features mix kinds");
    }

    nlohmann::json preds = nlohmann::json::array();
    for (const auto& q : workload.queries) preds.push_back(predicate_to_json(q.predicate));
    const nlohmann::json header = {{"format", "mci-workload"},
                                   {"kind", to_string(workload.kind)},
                                   {"seed", workload.seed},
                                   {"k", workload.k},
                                   {"dim", workload.dim},
                                   {"n", n},
                                   {"num_queries", nq},
                                   {"feature_kind", to_string(fk)},
                                   {"params", nlohmann::json::parse(workload.params_json)},
                                   {"predicates", preds}};
    const std::string text = header.dump();

    Writer w;
    w.put_tag("MCIW");
    w.put(std::uint32_t{1});
    w.put(static_cast<std::uint64_t>(text.size()));
    w.put_string(text);
    if (fk == FeatureKind::scalar) {
        for (const auto& f : workload.data_features) w.put(std::get<float>(f));
    } else if (fk == FeatureKind::labels) {
        std::uint64_t off = 0;
        w.put(off);
        for (const auto& f : workload.data_features) {
            off += std::get<LabelSet>(f).labels.size();
            w.put(off);
        }
        for (const auto& f : workload.data_features) w.put_array(std::span<const std::uint32_t>(std::get<LabelSet>(f).labels));
    }
    for (const auto& q : workload.queries) {
        if (q.vector.size() != workload.dim) throw DimensionError("query vector dim differs from workload dim");
        w.put_array(std::span<const float>(q.vector));
    }
    for (const auto& m : workload.masks) {
        if (m.size() != n) throw DimensionError("mask length differs from n");
        w.put_array(m.words());
    }
    for (const auto& gt : workload.ground_truth) {
        w.put(static_cast<std::uint32_t>(gt.size()));
        w.put_array(std::span<const NodeId>(gt));
    }
    w.put_array(std::span<const double>(workload.selectivities));
    write_file(path, w.take());
}

Workload load_workload(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    Reader r(bytes);
    const auto magic = r.get_bytes(4, "magic");
    if (std::memcmp(magic.data(), "MCIW", 4) != 0) throw LoadError("bad magic: not a workload file");
    if (r.get<std::uint32_t>("version") != 1) throw LoadError("unsupported workload version");
    const auto hlen = r.get<std::uint64_t>("header length");
    const auto htext = r.get_bytes(hlen, "header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(htext.begin(), htext.end());
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed workload header: ") + e.what());
    }
    Workload w;
    std::size_t n = 0;
    std::size_t nq = 0;
    std::string fk;
    try {
        w.kind = workload_kind_from_string(h.at("kind").get<std::string>());
        w.seed = h.at("seed").get<std::uint64_t>();
        w.k = h.at("k").get<std::size_t>();
        w.dim = h.at("dim").get<std::size_t>();
        w.params_json = h.at("params").dump();
        n = h.at("n").get<std::size_t>();
        nq = h.at("num_queries").get<std::size_t>();
        fk = h.at("feature_kind").get<std::string>();
        for (const auto& p : h.at("predicates")) w.queries.push_back(Query{{}, predicate_from_json(p)});
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(std::string("malformed workload header: ") + e.what());
    }
    if (w.queries.size() != nq) throw LoadError("workload header predicate count differs from num_queries");

    if (fk == "scalar") {
        const auto vals = r.get_array<float>(n, "scalar features");
        w.data_features.assign(vals.begin(), vals.end());
    } else if (fk == "labels") {
        const auto off = r.get_array<std::uint64_t>(n + 1, "label offsets");
        check_offsets(off, off.back(), "label");
        const auto pool = r.get_array<std::uint32_t>(off.back(), "label pool");
        w.data_features.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            w.data_features.emplace_back(LabelSet{std::vector<std::uint32_t>(
                pool.begin() + static_cast<std::ptrdiff_t>(off[i]), pool.begin() + static_cast<std::ptrdiff_t>(off[i + 1]))});
        }
    } else {
        w.data_features.assign(n, Feature{});
    }
    for (auto& q : w.queries) q.vector = r.get_array<float>(w.dim, "query vectors");
    const std::size_t words = (n + 63) / 64;
    for (std::size_t q = 0; q < nq; ++q) {
        const auto raw = r.get_array<std::uint64_t>(words, "masks");
        PredicateMask m(n);
        for (std::size_t i = 0; i < n; ++i) {
            if ((raw[i >> 6] >> (i & 63)) & 1ULL) m.set(i, true);
        }
        w.masks.push_back(std::move(m));
    }
    for (std::size_t q = 0; q < nq; ++q) {
        const auto count = r.get<std::uint32_t>("ground truth");
        w.ground_truth.push_back(r.get_array<NodeId>(count, "ground truth"));
    }
    w.selectivities = r.get_array<double>(nq, "selectivities");
    if (r.remaining() != 0) throw LoadError("trailing bytes after workload body");
    return w;
}

std::vector<Feature> load_features_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    const bool scalar = header == "scalar";
    if (!scalar && header != "labels") throw ParseError("features file must start with `scalar` or `labels`");
    std::vector<Feature> out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        if (scalar) {
            float v = 0.0F;
            if (!(ls >> v)) throw ParseError("bad scalar on line " + std::to_string(lineno));
            out.emplace_back(v);
        } else {
            std::vector<std::uint32_t> labels;
            long long x = 0;
            while (ls >> x) {
                if (x < 0) throw ParseError("negative label on line " + std::to_string(lineno));
                labels.push_back(static_cast<std::uint32_t>(x));
            }
            out.emplace_back(LabelSet::of(std::move(labels)));
        }
    }
    return out;
}

}  // namespace mci
