#pragma once

#include "carmine/tabular.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace carmine {

/// Dense feature matrix over the rows that are complete for the selected
/// features, in source row order.
struct SampleMatrix {
  std::vector<std::string> row_ids;
  std::vector<std::string> features;
  Eigen::MatrixXd values;  // one sample per row
};

struct SampleSelection {
  SampleMatrix samples;
  std::vector<std::string> excluded_rows;  // rows with a missing selected feature
};

SampleSelection complete_rows(const NumericTable& table, const std::vector<std::string>& features);

struct TrainingSchedule {
  int epochs = 500;
  double eta0 = 0.5;     // initial learning rate, in [0, 1]
  double sigma0 = 0.0;   // initial radius; <= 0 resolves to max(rows, cols)/2
  double tau_eta = 0.0;  // <= 0 resolves so eta decays to eta0/100 by the end
  double tau_sigma = 0.0;  // <= 0 resolves so sigma decays to ~0.5 by the end
};

/// Rectangular lattice of codebook vectors. Nodes are numbered 1..rows*cols
/// starting at the bottom-left corner and ending at the top-right.
class SomGrid {
 public:
  SomGrid() = default;
  SomGrid(int rows, int cols, Eigen::Index dim, std::uint64_t seed);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int node_count() const { return rows_ * cols_; }
  Eigen::Index dim() const { return codebooks_.cols(); }
  std::uint64_t seed() const { return seed_; }

  // node is 1-based; returns (grid_row counted from the bottom, grid_col).
  std::pair<int, int> node_position(int node) const;
  int node_at(int grid_row, int grid_col) const;
  double grid_distance(int node_a, int node_b) const;  // Euclidean in lattice units

  Eigen::MatrixXd& codebooks() { return codebooks_; }
  const Eigen::MatrixXd& codebooks() const { return codebooks_; }

  std::string to_json_text() const;
  static SomGrid from_json_text(const std::string& text);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd codebooks_;  // node_count x dim, node i in row i-1
};

// Seeded uniform initialization within each feature's observed [min, max].
// dim must equal the sample feature count.
SomGrid init_som(int rows, int cols, Eigen::Index dim, std::uint64_t seed,
                 const SampleMatrix& data);

struct BmuResult {
  int node = 0;  // 1-based; ties break to the lowest index
  double distance = 0;
};

BmuResult bmu(const SomGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& x);

// One competitive-learning presentation: BMU search, then for every node j
//   w_j += eta * exp(-d_grid(j, bmu)^2 / (2 sigma^2)) * (x - w_j).
// Returns the BMU index.
int apply_presentation(SomGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& x, double eta,
                       double sigma);

struct TrainResult {
  SomGrid grid;
  std::vector<double> quantization_errors;  // mean BMU distance after each epoch
};

// Online training with exponentially decayed eta/sigma over the global
// presentation counter and a seeded per-epoch shuffle. Bit-identical output
// for any worker count.
TrainResult train(const SomGrid& initial, const SampleMatrix& data,
                  const TrainingSchedule& schedule, int workers = 1);

// Mean Euclidean distance from each codebook to its 4-connected neighbours;
// a single-node grid is defined as 0.
Eigen::VectorXd u_matrix(const SomGrid& grid);

Eigen::VectorXd component_plane(const SomGrid& grid, Eigen::Index feature);

struct MapOverlay {
  // per_node[i] lists (row_id, label) pairs assigned to node i+1.
  std::vector<std::vector<std::pair<std::string, std::string>>> per_node;
};

// Assigns every sample to its BMU. labels must parallel data rows.
MapOverlay map_samples(const SomGrid& grid, const SampleMatrix& data,
                       const std::vector<std::string>& labels);

// Exports keyed by 1-based node index.
std::string node_values_json_text(const Eigen::VectorXd& values);
std::string overlay_json_text(const MapOverlay& overlay);

}  // namespace carmine
