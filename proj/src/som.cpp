#include "carmine/som.hpp"

#include "carmine/error.hpp"
#include "carmine/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>

namespace carmine {

namespace {

// Long-lived helper threads with a generation barrier. run(fn) executes
// fn(worker) for every worker index; the calling thread takes index 0. All
// node/row work is statically partitioned by worker index, so results do not
// depend on the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(int workers) : size_(workers < 1 ? 1 : workers) {
    for (int i = 1; i < size_; ++i) {
      threads_.emplace_back([this, i] { worker_loop(i); });
    }
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int size() const { return size_; }

  void run(const std::function<void(int)>& fn) {
    if (size_ == 1) {
      fn(0);
      return;
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = &fn;
      pending_ = size_ - 1;
      ++generation_;
    }
    start_cv_.notify_all();
    fn(0);
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void worker_loop(int index) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(int)>* job = nullptr;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      (*job)(index);
      {
        std::lock_guard<std::mutex> lock(mutex_);
        --pending_;
      }
      done_cv_.notify_one();
    }
  }

  const int size_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_, done_cv_;
  const std::function<void(int)>* job_ = nullptr;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

std::pair<int, int> chunk_range(int total, int chunks, int index) {
  const int lo = static_cast<int>(static_cast<long long>(total) * index / chunks);
  const int hi = static_cast<int>(static_cast<long long>(total) * (index + 1) / chunks);
  return {lo, hi};
}

// Lowest-index argmin over [begin, end); strict < keeps the tie rule.
void best_node_in_range(const Eigen::MatrixXd& codebooks,
                        const Eigen::Ref<const Eigen::RowVectorXd>& x, int begin, int end,
                        int* best_node, double* best_dist2) {
  *best_node = -1;
  *best_dist2 = std::numeric_limits<double>::infinity();
  for (int j = begin; j < end; ++j) {
    const double d2 = (codebooks.row(j) - x).squaredNorm();
    if (d2 < *best_dist2) {
      *best_dist2 = d2;
      *best_node = j;
    }
  }
}

struct NodeCoords {
  std::vector<double> row;
  std::vector<double> col;
};

NodeCoords node_coords(const SomGrid& grid) {
  NodeCoords coords;
  coords.row.reserve(static_cast<std::size_t>(grid.node_count()));
  coords.col.reserve(static_cast<std::size_t>(grid.node_count()));
  for (int node = 1; node <= grid.node_count(); ++node) {
    const auto [r, c] = grid.node_position(node);
    coords.row.push_back(static_cast<double>(r));
    coords.col.push_back(static_cast<double>(c));
  }
  return coords;
}

void update_range(Eigen::MatrixXd& codebooks, const NodeCoords& coords, int bmu_index,
                  const Eigen::Ref<const Eigen::RowVectorXd>& x, double eta, double sigma,
                  int begin, int end) {
  const double denom = 2.0 * sigma * sigma;
  const double br = coords.row[static_cast<std::size_t>(bmu_index)];
  const double bc = coords.col[static_cast<std::size_t>(bmu_index)];
  for (int j = begin; j < end; ++j) {
    const double dr = coords.row[static_cast<std::size_t>(j)] - br;
    const double dc = coords.col[static_cast<std::size_t>(j)] - bc;
    const double d2 = dr * dr + dc * dc;
    // sigma -> 0 degenerates to a winner-only update
    const double h = denom > 0 ? std::exp(-d2 / denom) : (d2 == 0 ? 1.0 : 0.0);
    codebooks.row(j) += (eta * h) * (x - codebooks.row(j));
  }
}

struct ResolvedSchedule {
  int epochs;
  double eta0, sigma0, tau_eta, tau_sigma;

  double eta(std::int64_t n) const { return eta0 * std::exp(-static_cast<double>(n) / tau_eta); }
  double sigma(std::int64_t n) const {
    return sigma0 * std::exp(-static_cast<double>(n) / tau_sigma);
  }
};

ResolvedSchedule resolve_schedule(const TrainingSchedule& schedule, int rows, int cols,
                                  std::int64_t total_presentations) {
  if (schedule.epochs < 1) throw Error("som: epochs must be positive");
  if (!(schedule.eta0 >= 0.0 && schedule.eta0 <= 1.0))
    throw Error("som: eta0 must lie in [0, 1]");

  ResolvedSchedule r;
  r.epochs = schedule.epochs;
  r.eta0 = schedule.eta0;
  r.sigma0 = schedule.sigma0 > 0 ? schedule.sigma0 : std::max(rows, cols) / 2.0;

  const double t = static_cast<double>(std::max<std::int64_t>(total_presentations, 1));
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Defaults land sigma near 0.5 and eta near eta0/100 at the last step.
  r.tau_sigma = schedule.tau_sigma > 0
                    ? schedule.tau_sigma
                    : (r.sigma0 > 0.5 ? t / std::log(r.sigma0 / 0.5) : inf);
  r.tau_eta = schedule.tau_eta > 0 ? schedule.tau_eta : t / std::log(100.0);
  return r;
}

}  // namespace

SampleSelection complete_rows(const NumericTable& table, const std::vector<std::string>& features) {
  if (features.empty()) throw Error("som: no features selected");
  std::vector<Eigen::Index> cols;
  cols.reserve(features.size());
  for (const auto& f : features) cols.push_back(table.require_column(f));

  SampleSelection out;
  out.samples.features = features;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < table.row_count(); ++r) {
    bool complete = true;
    for (const auto c : cols) {
      if (table.is_missing(r, c)) {
        complete = false;
        break;
      }
    }
    if (complete) {
      keep.push_back(r);
      out.samples.row_ids.push_back(table.row_ids()[r]);
    } else {
      out.excluded_rows.push_back(table.row_ids()[r]);
    }
  }

  out.samples.values.resize(static_cast<Eigen::Index>(keep.size()),
                            static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out.samples.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          table.cells()(keep[i], cols[j]);
    }
  }
  return out;
}

SomGrid::SomGrid(int rows, int cols, Eigen::Index dim, std::uint64_t seed)
    : rows_(rows), cols_(cols), seed_(seed) {
  if (rows < 1 || cols < 1) throw Error("som: grid dimensions must be positive");
  if (dim < 1) throw Error("som: feature dimension must be positive");
  codebooks_.setZero(static_cast<Eigen::Index>(rows) * cols, dim);
}

std::pair<int, int> SomGrid::node_position(int node) const {
  if (node < 1 || node > node_count()) throw Error("som: node index out of range");
  const int idx = node - 1;
  return {idx / cols_, idx % cols_};
}

int SomGrid::node_at(int grid_row, int grid_col) const {
  if (grid_row < 0 || grid_row >= rows_ || grid_col < 0 || grid_col >= cols_)
    throw Error("som: grid position out of range");
  return grid_row * cols_ + grid_col + 1;
}

double SomGrid::grid_distance(int node_a, int node_b) const {
  const auto [ra, ca] = node_position(node_a);
  const auto [rb, cb] = node_position(node_b);
  const double dr = static_cast<double>(ra - rb);
  const double dc = static_cast<double>(ca - cb);
  return std::sqrt(dr * dr + dc * dc);
}

std::string SomGrid::to_json_text() const {
  nlohmann::ordered_json doc;
  doc["rows"] = rows_;
  doc["cols"] = cols_;
  doc["dim"] = dim();
  doc["seed"] = seed_;
  nlohmann::ordered_json cb = nlohmann::ordered_json::array();
  for (Eigen::Index j = 0; j < codebooks_.rows(); ++j) {
    nlohmann::ordered_json w = nlohmann::ordered_json::array();
    for (Eigen::Index f = 0; f < codebooks_.cols(); ++f) w.push_back(codebooks_(j, f));
    cb.push_back(std::move(w));
  }
  doc["codebooks"] = std::move(cb);
  return doc.dump(2) + "\n";
}

SomGrid SomGrid::from_json_text(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("grid checkpoint JSON: ") + e.what());
  }
  SomGrid grid(doc.at("rows").get<int>(), doc.at("cols").get<int>(),
               doc.at("dim").get<Eigen::Index>(), doc.at("seed").get<std::uint64_t>());
  const auto& cb = doc.at("codebooks");
  if (static_cast<int>(cb.size()) != grid.node_count())
    throw Error("grid checkpoint JSON: codebook count mismatch");
  for (Eigen::Index j = 0; j < grid.codebooks_.rows(); ++j) {
    const auto& w = cb.at(static_cast<std::size_t>(j));
    if (static_cast<Eigen::Index>(w.size()) != grid.dim())
      throw Error("grid checkpoint JSON: codebook length mismatch");
    for (Eigen::Index f = 0; f < grid.dim(); ++f)
      grid.codebooks_(j, f) = w.at(static_cast<std::size_t>(f)).get<double>();
  }
  return grid;
}

SomGrid init_som(int rows, int cols, Eigen::Index dim, std::uint64_t seed,
                 const SampleMatrix& data) {
  if (data.values.rows() < 1) throw Error("som: no complete rows to initialize from");
  if (dim != data.values.cols()) {
    throw Error("som: dim " + std::to_string(dim) + " does not match the " +
                std::to_string(data.values.cols()) + " selected features");
  }
  SomGrid grid(rows, cols, dim, seed);
  const Eigen::RowVectorXd lo = data.values.colwise().minCoeff();
  const Eigen::RowVectorXd hi = data.values.colwise().maxCoeff();
  Rng rng(seed);
  for (Eigen::Index j = 0; j < grid.codebooks().rows(); ++j) {
    for (Eigen::Index f = 0; f < dim; ++f) {
      grid.codebooks()(j, f) = lo(f) + rng.uniform01() * (hi(f) - lo(f));
    }
  }
  return grid;
}

BmuResult bmu(const SomGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != grid.dim()) throw Error("som: sample length does not match grid dim");
  if (x.hasNaN()) throw Error("som: NaN in sample");
  int node = -1;
  double d2 = 0;
  best_node_in_range(grid.codebooks(), x.transpose(), 0, grid.node_count(), &node, &d2);
  return {node + 1, std::sqrt(d2)};
}

int apply_presentation(SomGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& x, double eta,
                       double sigma) {
  const BmuResult winner = bmu(grid, x);
  if (eta != 0.0) {
    const NodeCoords coords = node_coords(grid);
    update_range(grid.codebooks(), coords, winner.node - 1, x.transpose(), eta, sigma, 0,
                 grid.node_count());
  }
  return winner.node;
}

TrainResult train(const SomGrid& initial, const SampleMatrix& data,
                  const TrainingSchedule& schedule, int workers) {
  const auto n_samples = static_cast<int>(data.values.rows());
  if (n_samples == 0) throw Error("som: empty training data");
  if (data.values.cols() != initial.dim())
    throw Error("som: training data width does not match grid dim");
  if (data.values.hasNaN()) throw Error("som: NaN in training data");

  const std::int64_t total = static_cast<std::int64_t>(schedule.epochs) * n_samples;
  const ResolvedSchedule sched = resolve_schedule(schedule, initial.rows(), initial.cols(), total);

  TrainResult result{initial, {}};
  Eigen::MatrixXd& cb = result.grid.codebooks();
  const NodeCoords coords = node_coords(result.grid);
  const int nodes = result.grid.node_count();

  WorkerPool pool(workers);
  const int w = pool.size();
  std::vector<int> worker_node(static_cast<std::size_t>(w));
  std::vector<double> worker_dist(static_cast<std::size_t>(w));
  std::vector<double> row_dist(static_cast<std::size_t>(n_samples));

  std::vector<int> order(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng shuffle_rng(initial.seed() ^ 0x9e3779b97f4a7c15ULL);

  std::int64_t n = 0;  // global presentation counter
  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (const int sample : order) {
      const Eigen::RowVectorXd x = data.values.row(sample);
      const double eta = sched.eta(n);
      const double sigma = sched.sigma(n);

      pool.run([&](int worker) {
        const auto [begin, end] = chunk_range(nodes, w, worker);
        best_node_in_range(cb, x, begin, end, &worker_node[static_cast<std::size_t>(worker)],
                           &worker_dist[static_cast<std::size_t>(worker)]);
      });
      int bmu_index = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < w; ++i) {
        if (worker_dist[static_cast<std::size_t>(i)] < best) {
          best = worker_dist[static_cast<std::size_t>(i)];
          bmu_index = worker_node[static_cast<std::size_t>(i)];
        }
      }

      if (eta != 0.0) {
        pool.run([&](int worker) {
          const auto [begin, end] = chunk_range(nodes, w, worker);
          update_range(cb, coords, bmu_index, x, eta, sigma, begin, end);
        });
      }
      ++n;
    }

    // Quantization error: mean BMU distance, summed in fixed row order.
    pool.run([&](int worker) {
      const auto [begin, end] = chunk_range(n_samples, w, worker);
      for (int r = begin; r < end; ++r) {
        int node = -1;
        double d2 = 0;
        best_node_in_range(cb, data.values.row(r), 0, nodes, &node, &d2);
        row_dist[static_cast<std::size_t>(r)] = std::sqrt(d2);
      }
    });
    double sum = 0;
    for (int r = 0; r < n_samples; ++r) sum += row_dist[static_cast<std::size_t>(r)];
    result.quantization_errors.push_back(sum / n_samples);
  }
  return result;
}

Eigen::VectorXd u_matrix(const SomGrid& grid) {
  Eigen::VectorXd values(grid.node_count());
  for (int node = 1; node <= grid.node_count(); ++node) {
    const auto [r, c] = grid.node_position(node);
    double sum = 0;
    int neighbours = 0;
    const int dr[] = {1, -1, 0, 0};
    const int dc[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int nr = r + dr[k];
      const int nc = c + dc[k];
      if (nr < 0 || nr >= grid.rows() || nc < 0 || nc >= grid.cols()) continue;
      const int other = grid.node_at(nr, nc);
      sum += (grid.codebooks().row(node - 1) - grid.codebooks().row(other - 1)).norm();
      ++neighbours;
    }
    values(node - 1) = neighbours > 0 ? sum / neighbours : 0.0;
  }
  return values;
}

Eigen::VectorXd component_plane(const SomGrid& grid, Eigen::Index feature) {
  if (feature < 0 || feature >= grid.dim())
    throw Error("som: component plane feature index out of range");
  return grid.codebooks().col(feature);
}

MapOverlay map_samples(const SomGrid& grid, const SampleMatrix& data,
                       const std::vector<std::string>& labels) {
  if (labels.size() != data.row_ids.size())
    throw Error("som: overlay labels must parallel the sample rows");
  MapOverlay overlay;
  overlay.per_node.resize(static_cast<std::size_t>(grid.node_count()));
  for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
    const BmuResult winner = bmu(grid, data.values.row(r).transpose());
    overlay.per_node[static_cast<std::size_t>(winner.node - 1)].emplace_back(
        data.row_ids[static_cast<std::size_t>(r)], labels[static_cast<std::size_t>(r)]);
  }
  return overlay;
}

std::string node_values_json_text(const Eigen::VectorXd& values) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    doc[std::to_string(i + 1)] = values(i);
  }
  return doc.dump(2) + "\n";
}

std::string overlay_json_text(const MapOverlay& overlay) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < overlay.per_node.size(); ++i) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& [id, label] : overlay.per_node[i]) {
      list.push_back({{"id", id}, {"label", label}});
    }
    doc[std::to_string(i + 1)] = std::move(list);
  }
  return doc.dump(2) + "\n";
}

}  // namespace carmine
