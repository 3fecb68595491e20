#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mci {

using NodeId = std::uint32_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class PredicateTypeError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// Sorted, duplicate-free set of integer labels attached to a data point.
struct LabelSet {
    std::vector<std::uint32_t> labels;

    bool contains(std::uint32_t label) const;
    bool contains_all(std::span<const std::uint32_t> sorted_query) const;
    static LabelSet of(std::vector<std::uint32_t> labels);
    friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

struct Bytes {
    std::vector<std::uint8_t> data;
    friend bool operator==(const Bytes&, const Bytes&) = default;
};

/// Per-point feature payload. `std::monostate` means "no feature attached";
/// only the always-true and external-mask predicates accept it.
using Feature = std::variant<std::monostate, float, LabelSet, Bytes>;

enum class FeatureKind : std::uint8_t { none, scalar, labels, bytes };

FeatureKind kind_of(const Feature& f);
const char* to_string(FeatureKind k);

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Row-major store of n vectors of a fixed dimension plus one feature per row.
/// Non-finite components are rejected at construction.
class Dataset {
public:
    Dataset(std::size_t dim, std::vector<float> vectors);
    Dataset(std::size_t dim, std::vector<float> vectors, std::vector<Feature> features);

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }

    std::span<const float> row(NodeId i) const {
        return {vectors_.data() + static_cast<std::size_t>(i) * dim_, dim_};
    }
    const float* row_ptr(NodeId i) const {
        return vectors_.data() + static_cast<std::size_t>(i) * dim_;
    }
    std::span<const float> vectors() const { return vectors_; }

    const Feature& feature(NodeId i) const { return features_.at(i); }
    std::span<const Feature> features() const { return features_; }
    void set_features(std::vector<Feature> features);

    /// Appends one row; returns its id.
    NodeId append(std::span<const float> v, Feature f = {});

private:
    std::size_t n_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> vectors_;
    std::vector<Feature> features_;
};

// ---------------------------------------------------------------------------
// Distance
// ---------------------------------------------------------------------------

enum class Accumulator : std::uint8_t { f32, f64 };

/// Squared Euclidean distance. Throws DimensionError on length mismatch.
float distance(std::span<const float> a, std::span<const float> b,
               Accumulator acc = Accumulator::f32);

/// Unchecked squared L2 kernel used on hot paths.
float l2sq(const float* a, const float* b, std::size_t dim);

// ---------------------------------------------------------------------------
// Predicates
// ---------------------------------------------------------------------------

class PredicateMask;

/// A filter over per-point features. Evaluation is a pure function of the
/// stored feature and the predicate's own parameters.
class Predicate {
public:
    enum class Kind : std::uint8_t {
        always_true,
        scalar_range,   // lo <= f <= hi
        label_match,    // f contains `label`
        label_subset,   // f contains every label of `labels`
        external_mask,  // caller-provided bit per node
        callback,       // user function over opaque bytes
    };

    using BytesCallback = std::function<bool(std::span<const std::uint8_t>)>;

    static Predicate always_true();
    static Predicate range(float lo, float hi);
    static Predicate label(std::uint32_t label);
    static Predicate labels_subset(std::vector<std::uint32_t> labels);
    static Predicate external(std::shared_ptr<const std::vector<bool>> mask);
    static Predicate bytes_callback(BytesCallback fn);

    /// Parses the CLI grammar: `true` | `range L R` | `label X`.
    static Predicate parse(const std::string& text);

    Kind kind() const { return kind_; }
    float lo() const { return lo_; }
    float hi() const { return hi_; }
    std::uint32_t label_value() const { return label_; }
    std::span<const std::uint32_t> label_values() const { return labels_; }

    /// Throws PredicateTypeError if the feature kind is incompatible.
    bool test(NodeId id, const Feature& f) const;

    std::string to_string() const;

private:
    Kind kind_ = Kind::always_true;
    float lo_ = 0.0F;
    float hi_ = 0.0F;
    std::uint32_t label_ = 0;
    std::vector<std::uint32_t> labels_;
    std::shared_ptr<const std::vector<bool>> mask_;
    BytesCallback fn_;
};

struct Query {
    std::vector<float> vector;
    Predicate predicate = Predicate::always_true();
};

/// Precomputed evaluation of a predicate over every point of a dataset.
class PredicateMask {
public:
    PredicateMask() = default;
    explicit PredicateMask(std::size_t n, bool value = false);

    std::size_t size() const { return n_; }
    std::size_t true_count() const { return true_count_; }

    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1ULL; }
    void set(std::size_t i, bool value);

    std::span<const std::uint64_t> words() const { return words_; }

    /// Bitwise AND with another mask of the same length.
    PredicateMask& operator&=(const PredicateMask& other);

    template <class Fn>
    void for_each_set(Fn&& fn) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits != 0) {
                const int b = __builtin_ctzll(bits);
                fn(static_cast<NodeId>(w * 64 + static_cast<std::size_t>(b)));
                bits &= bits - 1;
            }
        }
    }

    friend bool operator==(const PredicateMask&, const PredicateMask&) = default;

private:
    std::size_t n_ = 0;
    std::size_t true_count_ = 0;
    std::vector<std::uint64_t> words_;
};

PredicateMask evaluate_mask(const Dataset& dataset, const Predicate& predicate);
PredicateMask evaluate_mask(const Dataset& dataset, const Query& query);

/// Fraction of the n points whose mask bit is set.
double selectivity(const PredicateMask& mask, std::size_t n);

}  // namespace mci
