#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hgpop/count_matrix.hpp"
#include "hgpop/latent_model.hpp"
#include "hgpop/simulator.hpp"

namespace hgpop {

enum class CountFormat { dense_csv, sparse_triplet };

CountFormat parse_count_format(std::string_view name);
std::string count_format_name(CountFormat format);

/// Dense CSV: header `cat_0,...,cat_{K-1}`, one observation per line.
void write_dense_csv(const std::filesystem::path& path, const CountMatrix& counts);
CountMatrix read_dense_csv(const std::filesystem::path& path);

/// Sparse triplets: a `# shape,<rows>,<cols>` line, header `row,col,count`,
/// then one nonzero entry per line (0-based). Duplicate (row, col) entries
/// are summed on read. Without a shape line the shape is taken from the
/// largest indices seen.
void write_sparse_triplets(const std::filesystem::path& path, const CountMatrix& counts);
CountMatrix read_sparse_triplets(const std::filesystem::path& path);

void write_counts(const std::filesystem::path& path, const CountMatrix& counts, CountFormat format);
CountMatrix read_counts(const std::filesystem::path& path, CountFormat format);

/// Sidecar describing a dataset: labels and ground truth when known, plus
/// the simulation config that produced it.
struct DatasetManifest {
    std::size_t num_rows = 0;
    std::size_t num_categories = 0;
    std::vector<int> labels;
    std::vector<std::vector<Count>> ground_truth;
    std::optional<SimulationConfig> simulation;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);
/// Throws ValidationError when the manifest does not describe `counts`.
void check_manifest(const DatasetManifest& manifest, const CountMatrix& counts);

DatasetManifest manifest_for(const SimulatedDataset& ds, const SimulationConfig& config);

/// JSON container: format tag, version, network spec, category count and
/// every layer's row-major weights followed by its bias. Doubles are written
/// with round-trip precision, so a reloaded model infers bit-identically.
void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_checkpoint(const std::filesystem::path& path);

inline constexpr int kCheckpointVersion = 1;

}  // namespace hgpop
