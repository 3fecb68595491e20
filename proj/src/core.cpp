#include "mci/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace mci {

bool LabelSet::contains(std::uint32_t label) const {
    return std::binary_search(labels.begin(), labels.end(), label);
}

bool LabelSet::contains_all(std::span<const std::uint32_t> sorted_query) const {
    return std::includes(labels.begin(), labels.end(), sorted_query.begin(), sorted_query.end());
}

LabelSet LabelSet::of(std::vector<std::uint32_t> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return LabelSet{std::move(labels)};
}

FeatureKind kind_of(const Feature& f) {
    return static_cast<FeatureKind>(f.index());
}

const char* to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::none: return "none";
        case FeatureKind::scalar: return "scalar";
        case FeatureKind::labels: return "labels";
        case FeatureKind::bytes: return "bytes";
    }
    return "?";
}

// ---------------------------------------------------------------------------

namespace {

void check_finite(std::span<const float> values, std::size_t dim) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw InvalidArgument("non-finite component at row " + std::to_string(i / dim) +
                                  ", column " + std::to_string(i % dim));
        }
    }
}

}  // namespace

Dataset::Dataset(std::size_t dim, std::vector<float> vectors)
    : Dataset(dim, std::move(vectors), {}) {}

Dataset::Dataset(std::size_t dim, std::vector<float> vectors, std::vector<Feature> features)
    : dim_(dim), vectors_(std::move(vectors)), features_(std::move(features)) {
    if (dim_ == 0) throw InvalidArgument("dataset dimension must be >= 1");
    if (vectors_.size() % dim_ != 0) {
        throw DimensionError("vector storage length " + std::to_string(vectors_.size()) +
                             " is not a multiple of dim " + std::to_string(dim_));
    }
    n_ = vectors_.size() / dim_;
    if (n_ == 0) throw InvalidArgument("dataset must contain at least one vector");
    check_finite(vectors_, dim_);
    if (features_.empty()) {
        features_.resize(n_);
    } else if (features_.size() != n_) {
        throw InvalidArgument("feature count " + std::to_string(features_.size()) +
                              " does not match vector count " + std::to_string(n_));
    }
}

void Dataset::set_features(std::vector<Feature> features) {
    if (features.size() != n_) {
        throw InvalidArgument("feature count " + std::to_string(features.size()) +
                              " does not match vector count " + std::to_string(n_));
    }
    features_ = std::move(features);
}

NodeId Dataset::append(std::span<const float> v, Feature f) {
    if (v.size() != dim_) {
        throw DimensionError("appended vector has dim " + std::to_string(v.size()) +
                             ", dataset dim is " + std::to_string(dim_));
    }
    check_finite(v, dim_);
    vectors_.insert(vectors_.end(), v.begin(), v.end());
    features_.push_back(std::move(f));
    return static_cast<NodeId>(n_++);
}

// ---------------------------------------------------------------------------

float l2sq(const float* a, const float* b, std::size_t dim) {
    // Four independent accumulators let the compiler vectorize without
    // reassociation flags.
    float s0 = 0.0F;
    float s1 = 0.0F;
    float s2 = 0.0F;
    float s3 = 0.0F;
    std::size_t i = 0;
    for (; i + 4 <= dim; i += 4) {
        const float d0 = a[i] - b[i];
        const float d1 = a[i + 1] - b[i + 1];
        const float d2 = a[i + 2] - b[i + 2];
        const float d3 = a[i + 3] - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i < dim; ++i) {
        const float d = a[i] - b[i];
        s0 += d * d;
    }
    return (s0 + s1) + (s2 + s3);
}

float distance(std::span<const float> a, std::span<const float> b, Accumulator acc) {
    if (a.size() != b.size()) {
        throw DimensionError("distance between vectors of length " + std::to_string(a.size()) +
                             " and " + std::to_string(b.size()));
    }
    if (acc == Accumulator::f64) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            s += d * d;
        }
        return static_cast<float>(s);
    }
    return l2sq(a.data(), b.data(), a.size());
}

// ---------------------------------------------------------------------------

Predicate Predicate::always_true() { return Predicate{}; }

Predicate Predicate::range(float lo, float hi) {
    if (!(lo <= hi)) throw InvalidArgument("range predicate requires lo <= hi");
    Predicate p;
    p.kind_ = Kind::scalar_range;
    p.lo_ = lo;
    p.hi_ = hi;
    return p;
}

Predicate Predicate::label(std::uint32_t label) {
    Predicate p;
    p.kind_ = Kind::label_match;
    p.label_ = label;
    return p;
}

Predicate Predicate::labels_subset(std::vector<std::uint32_t> labels) {
    Predicate p;
    p.kind_ = Kind::label_subset;
    p.labels_ = LabelSet::of(std::move(labels)).labels;
    return p;
}

Predicate Predicate::external(std::shared_ptr<const std::vector<bool>> mask) {
    if (!mask) throw InvalidArgument("external mask predicate requires a mask");
    Predicate p;
    p.kind_ = Kind::external_mask;
    p.mask_ = std::move(mask);
    return p;
}

Predicate Predicate::bytes_callback(BytesCallback fn) {
    if (!fn) throw InvalidArgument("callback predicate requires a callable");
    Predicate p;
    p.kind_ = Kind::callback;
    p.fn_ = std::move(fn);
    return p;
}

Predicate Predicate::parse(const std::string& text) {
    std::istringstream in(text);
    std::string head;
    in >> head;
    Predicate p;
    if (head == "true") {
        p = always_true();
    } else if (head == "range") {
        float lo = 0.0F;
        float hi = 0.0F;
        if (!(in >> lo >> hi)) throw InvalidArgument("expected `range L R`, got `" + text + "`");
        p = range(lo, hi);
    } else if (head == "label") {
        long long x = -1;
        if (!(in >> x) || x < 0 || x > 0xffffffffLL) {
            throw InvalidArgument("expected `label X`, got `" + text + "`");
        }
        p = label(static_cast<std::uint32_t>(x));
    } else {
        throw InvalidArgument("unknown predicate `" + text + "`; expected true | range L R | label X");
    }
    std::string rest;
    if (in >> rest) throw InvalidArgument("trailing tokens in predicate `" + text + "`");
    return p;
}

namespace {

[[noreturn]] void kind_mismatch(const char* want, const Feature& f) {
    throw PredicateTypeError(std::string("predicate expects ") + want + " features, found " +
                             to_string(kind_of(f)));
}

}  // namespace

bool Predicate::test(NodeId id, const Feature& f) const {
    switch (kind_) {
        case Kind::always_true:
            return true;
        case Kind::scalar_range: {
            const auto* v = std::get_if<float>(&f);
            if (v == nullptr) kind_mismatch("scalar", f);
            return lo_ <= *v && *v <= hi_;
        }
        case Kind::label_match: {
            const auto* v = std::get_if<LabelSet>(&f);
            if (v == nullptr) kind_mismatch("label-set", f);
            return v->contains(label_);
        }
        case Kind::label_subset: {
            const auto* v = std::get_if<LabelSet>(&f);
            if (v == nullptr) kind_mismatch("label-set", f);
            return v->contains_all(labels_);
        }
        case Kind::external_mask:
            if (id >= mask_->size()) {
                throw PredicateTypeError("external mask has " + std::to_string(mask_->size()) +
                                         " entries; node " + std::to_string(id) + " is out of range");
            }
            return (*mask_)[id];
        case Kind::callback: {
            const auto* v = std::get_if<Bytes>(&f);
            if (v == nullptr) kind_mismatch("bytes", f);
            return fn_(v->data);
        }
    }
    return false;
}

std::string Predicate::to_string() const {
    std::ostringstream out;
    switch (kind_) {
        case Kind::always_true: out << "true"; break;
        case Kind::scalar_range: out.precision(9); out << "range " << lo_ << ' ' << hi_; break;
        case Kind::label_match: out << "label " << label_; break;
        case Kind::label_subset:
            out << "labels";
            for (auto l : labels_) out << ' ' << l;
            break;
        case Kind::external_mask: out << "external-mask"; break;
        case Kind::callback: out << "callback"; break;
    }
    return out.str();
}

// ---------------------------------------------------------------------------

PredicateMask::PredicateMask(std::size_t n, bool value)
    : n_(n), true_count_(value ? n : 0), words_((n + 63) / 64, value ? ~0ULL : 0ULL) {
    if (value && (n & 63) != 0) words_.back() = (1ULL << (n & 63)) - 1;
}

void PredicateMask::set(std::size_t i, bool value) {
    std::uint64_t& w = words_[i >> 6];
    const std::uint64_t bit = 1ULL << (i & 63);
    const bool was = (w & bit) != 0;
    if (was == value) return;
    if (value) {
        w |= bit;
        ++true_count_;
    } else {
        w &= ~bit;
        --true_count_;
    }
}

PredicateMask& PredicateMask::operator&=(const PredicateMask& other) {
    if (other.n_ != n_) throw DimensionError("mask length mismatch");
    true_count_ = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        words_[w] &= other.words_[w];
        true_count_ += static_cast<std::size_t>(std::popcount(words_[w]));
    }
    return *this;
}

PredicateMask evaluate_mask(const Dataset& dataset, const Predicate& predicate) {
    PredicateMask mask(dataset.size());
    if (predicate.kind() == Predicate::Kind::always_true) return PredicateMask(dataset.size(), true);
    const auto features = dataset.features();
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (predicate.test(static_cast<NodeId>(i), features[i])) mask.set(i, true);
    }
    return mask;
}

PredicateMask evaluate_mask(const Dataset& dataset, const Query& query) {
    return evaluate_mask(dataset, query.predicate);
}

double selectivity(const PredicateMask& mask, std::size_t n) {
    if (n == 0) throw InvalidArgument("selectivity requires n >= 1");
    return static_cast<double>(mask.true_count()) / static_cast<double>(n);
}

}  // namespace mci
