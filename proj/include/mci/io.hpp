#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mci/core.hpp"
#include "mci/eval.hpp"
#include "mci/index.hpp"
#include "mci/knng.hpp"

namespace mci {

class ParseError : public Error {
public:
    using Error::Error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// fvecs / ivecs / bvecs: each record is a little-endian i32 dim followed by
// dim elements of 4, 4 or 1 byte.
// ---------------------------------------------------------------------------

enum class VecsKind : std::uint8_t { f32, i32, u8 };

/// Infers the element kind from the extension (.fvecs / .ivecs / .bvecs).
VecsKind vecs_kind_from_path(const std::filesystem::path& path);

/// Raw rows and dimension of a vecs file; ivecs and bvecs are widened to float.
struct VecsMatrix {
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::vector<float> values;
};

VecsMatrix read_vecs(const std::filesystem::path& path, std::optional<VecsKind> kind = std::nullopt);

/// Dataset from a vecs file. Rejects empty files.
Dataset load_vecs(const std::filesystem::path& path, std::optional<VecsKind> kind = std::nullopt);

std::vector<std::vector<std::int32_t>> load_ivecs(const std::filesystem::path& path);

void save_fvecs(const std::filesystem::path& path, std::span<const float> values, std::size_t dim);
void save_fvecs(const std::filesystem::path& path, const Dataset& dataset);
void save_bvecs(const std::filesystem::path& path, std::span<const std::uint8_t> values, std::size_t dim);
void save_ivecs(const std::filesystem::path& path, std::span<const std::vector<std::int32_t>> rows);

/// One record of k' neighbor ids per node.
void save_knng_ivecs(const std::filesystem::path& path, const KnnGraph& graph);

// ---------------------------------------------------------------------------
// Index files
// ---------------------------------------------------------------------------

/// Serializes the compacted index. Layout (little-endian): "MCI1", u32 n,
/// u32 k', u32 tau, u32 clique_count, u64 total_members, u64 clique offsets
/// [clique_count + 1], u32 member pool [total_members], kind bitset
/// [ceil(clique_count / 8)] (bit set = pseudo), u64 node offsets [n + 1],
/// u32 node->clique pool [total_members]. Optional tagged sections follow:
/// "META" (build record as JSON) and "DELS" (deleted node ids).
std::vector<std::uint8_t> serialize_index(const CliqueIndex& index);
CliqueIndex deserialize_index(std::span<const std::uint8_t> bytes);

void save_index(const std::filesystem::path& path, const CliqueIndex& index);
/// Re-validates coverage, inverse index and size bound; throws LoadError
/// naming the failed check.
CliqueIndex load_index(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Workload files: "MCIW", u32 version, u64 header length, JSON header, then
// the binary body (data features, query vectors, masks, ground truth,
// selectivities).
// ---------------------------------------------------------------------------

void save_workload(const std::filesystem::path& path, const Workload& workload, std::size_t n);
Workload load_workload(const std::filesystem::path& path);

/// Plain-text features: first line `scalar` or `labels`, then one line per
/// point holding a number or space-separated labels.
std::vector<Feature> load_features_text(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mci
