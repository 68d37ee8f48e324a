#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dcgd/analysis.hpp"
#include "dcgd/config.hpp"
#include "dcgd/csv.hpp"
#include "dcgd/delay.hpp"
#include "dcgd/network.hpp"
#include "dcgd/objectives.hpp"
#include "dcgd/solver.hpp"
#include "dcgd/synthetic.hpp"
#include "dcgd/timing.hpp"
#include "dcgd/tomo.hpp"

namespace dcgd {

inline GridDims parse_grid(const std::string& text) {
  GridDims d{1, 1, 1};
  char sep1 = 0, sep2 = 0;
  std::istringstream ss(text);
  if (!(ss >> d.nx)) throw ConfigError("config: field 'problem.grid' has invalid value '" + text + "'");
  if (ss >> sep1 >> d.ny) {
    if (sep1 != 'x') throw ConfigError("config: field 'problem.grid' must look like 8x8 or 8x8x8");
    if (ss >> sep2 >> d.nz && sep2 != 'x')
      throw ConfigError("config: field 'problem.grid' must look like 8x8 or 8x8x8");
  }
  if (!ss.eof()) ss.clear();
  if (d.nx < 1 || d.ny < 1 || d.nz < 1)
    throw ConfigError("config: field 'problem.grid' has nonpositive extent");
  return d;
}

inline NetworkTopology build_topology(const ExperimentConfig& c) {
  const auto& t = c.topology;
  if (t.kind == "lattice2d") return make_lattice(t.rows, t.cols);
  if (t.kind == "ring") return make_ring(t.m);
  if (t.kind == "complete") return make_complete(t.m);
  if (t.kind == "kregular") return make_random_regular(t.m, t.k, c.run.seed);
  throw ConfigError("config: field 'topology.kind' has unknown value '" + t.kind + "'");
}

inline MixingMatrix build_mixing(const ExperimentConfig& c, const NetworkTopology& g) {
  if (c.mixing.rule == "uniform-complete") {
    if (!g.is_complete())
      throw ConfigError("config: mixing.rule 'uniform-complete' needs a complete topology");
    return uniform_complete_mixing(g.node_count);
  }
  if (c.mixing.rule != "metropolis")
    throw ConfigError("config: field 'mixing.rule' has unknown value '" + c.mixing.rule + "'");
  LazyShift lazy;
  if (c.mixing.lazy == "on") lazy = LazyShift::on;
  else if (c.mixing.lazy == "off") lazy = LazyShift::off;
  else if (c.mixing.lazy == "auto") lazy = LazyShift::automatic;
  else throw ConfigError("config: field 'mixing.lazy' must be on/off/auto");
  return metropolis_mixing(g, lazy);
}

inline DelayModel build_delay(const ExperimentConfig& c) {
  const auto& d = c.delay;
  if (d.kind == "none") return DelayModel::none();
  if (d.kind == "fixed") return DelayModel::fixed(d.tau);
  if (d.kind == "uniform") return DelayModel::uniform(d.bound);
  if (d.kind == "truncated-geometric") return DelayModel::truncated_geometric(d.p, d.bound);
  throw ConfigError("config: field 'delay.kind' has unknown value '" + d.kind + "'");
}

inline Problem build_problem(const ExperimentConfig& c, int nodes, std::uint64_t seed) {
  const auto& p = c.problem;
  if (p.kind == "tomo") {
    const GridDims dims = parse_grid(p.grid);
    PhantomKind phantom;
    if (p.phantom == "blobs") phantom = PhantomKind::Blobs;
    else if (p.phantom == "layered") phantom = PhantomKind::Layered;
    else throw ConfigError("config: field 'problem.phantom' must be blobs or layered");
    TomoRegularizer reg;
    if (p.regularizer == "none") reg = TomoRegularizer::None;
    else if (p.regularizer == "identity") reg = TomoRegularizer::Identity;
    else if (p.regularizer == "gradient") reg = TomoRegularizer::Gradient;
    else throw ConfigError("config: field 'problem.regularizer' must be none/identity/gradient");
    const TomoProblem tp = generate_tomo_problem(dims, nodes, p.rows_per_node, p.tomo_noise_std,
                                                 c.run.radius, seed, phantom, p.blob_count);
    return tomo_objectives(tp, reg, p.mu, c.run.sigma);
  }

  SyntheticSpec spec;
  if (p.kind == "synthetic-ls")
    spec.kind = p.mu > 0.0 ? ObjectiveKind::TikhonovIdentity : ObjectiveKind::LeastSquares;
  else if (p.kind == "synthetic-huber") spec.kind = ObjectiveKind::Huber;
  else if (p.kind == "synthetic-logistic") spec.kind = ObjectiveKind::Logistic;
  else throw ConfigError("config: field 'problem.kind' has unknown value '" + p.kind + "'");
  spec.nodes = nodes;
  spec.dim = p.dim;
  spec.rows_per_node = p.rows_per_node;
  spec.data_noise_std = p.data_noise_std;
  spec.huber_delta = p.huber_delta;
  spec.mu = p.mu;
  spec.sigma = c.run.sigma;
  return make_synthetic_problem(spec, c.run.radius, seed);
}

struct EnvelopeVerdict {
  std::string name;
  bool applicable = false;
  bool pass = false;
  double value = 0.0;      // measured worst quantity
  double threshold = 0.0;  // what it was compared against
};

// One seed's experiment: problem generation, reference solve, decentralized
// run, slope fits over the last decade, and the applicable bound checks.
struct SingleRunResult {
  RunTrace trace;
  ReferenceSolution reference;
  double eta = 0.0;
  double lambda = 0.0;
  long stale_regime_start = 0;
  std::optional<LogLogFit> gap_slope;
  std::optional<LogLogFit> disagreement_slope;
  std::vector<EnvelopeVerdict> verdicts;
  double image_rel_error = std::numeric_limits<double>::quiet_NaN();  // tomo runs
  std::vector<double> bound_disagreement;  // filled when run.record_bounds is on
  std::vector<double> bound_gap;
};

inline SingleRunResult run_single(const ExperimentConfig& c, std::uint64_t seed) {
  SingleRunResult out;

  const NetworkTopology topo = build_topology(c);
  const MixingMatrix mixing = build_mixing(c, topo);
  const DelayModel delay = build_delay(c);
  const Problem problem = build_problem(c, topo.node_count, seed);
  const BoundParameters bp = make_bound_parameters(problem, std::sqrt(delay.second_moment()));

  out.lambda = mixing.lambda;
  double eta = c.run.eta;
  if (c.run.eta_auto) {
    BoundInputs bi{topo.node_count,   static_cast<int>(problem.dim()),
                   c.run.radius,      mixing.lambda,
                   bp.gradient_bound, bp.lipschitz,
                   c.run.eta,         bp.delay_rms,
                   c.run.sigma};
    eta = minimize_sqrt_coefficient_eta(bi);
  }
  out.eta = eta;
  const StepSizePolicy policy{bp.lipschitz, eta};

  out.reference = centralized_reference(problem);

  RunOptions ro;
  ro.iterations = c.run.iterations;
  ro.seed = seed;
  ro.parallel_gradients = c.run.parallel;
  ro.reference_value = out.reference.value;
  ro.record_node_delays = c.run.record_delays;

  // per-step increment norms, for the sure-bound check on noiseless runs
  Eigen::MatrixXd prev_x = Eigen::MatrixXd::Zero(topo.node_count, problem.dim());
  double worst_increment_ratio = 0.0;
  const bool check_sure_bounds = c.run.sigma == 0.0 && mixing.lambda > 0.0 && mixing.lambda < 1.0;
  std::optional<ConvergenceBounds> bounds;
  if (mixing.lambda > 0.0 && mixing.lambda < 1.0)
    bounds.emplace(BoundInputs{topo.node_count, static_cast<int>(problem.dim()), c.run.radius,
                               mixing.lambda, bp.gradient_bound, bp.lipschitz, eta, bp.delay_rms,
                               c.run.sigma});

  StepObserver observer;
  if (check_sure_bounds) {
    observer = [&](long t, const SolverState& st) {
      if (t >= 1) {
        const double inc = (st.x - prev_x).norm();
        const double cap = bounds->increment_coeff() / std::sqrt(static_cast<double>(t));
        worst_increment_ratio = std::max(worst_increment_ratio, inc / cap);
      }
      prev_x = st.x;
    };
  }

  out.trace = run(problem, mixing, delay, policy, ro, observer);
  out.stale_regime_start = out.trace.stale_regime_start;

  if (problem.x_hint.size() > 0 && c.problem.kind == "tomo")
    out.image_rel_error = (out.trace.final_z - problem.x_hint).norm() / problem.x_hint.norm();

  // slope fits over the last decade of iterations
  const long T = c.run.iterations;
  const double t_lo = std::max(1.0, static_cast<double>(T) / 10.0);
  std::vector<double> dy(out.trace.size());
  for (std::size_t i = 0; i < dy.size(); ++i) dy[i] = std::sqrt(out.trace.disagreement_y_sq[i]);
  try {
    out.disagreement_slope = fit_loglog_rate(out.trace.t, dy, t_lo, static_cast<double>(T));
  } catch (const std::invalid_argument&) {
  }
  try {
    out.gap_slope = fit_loglog_rate(out.trace.t, out.trace.objective_gap, t_lo,
                                    static_cast<double>(T));
  } catch (const std::invalid_argument&) {
  }

  // bound envelopes
  if (bounds) {
    EnvelopeVerdict ev;
    ev.name = "disagreement_envelope";
    ev.applicable = c.run.sigma == 0.0;
    if (ev.applicable) {
      const auto envelope = bounds->disagreement_exact_series(T);
      double worst = 0.0;
      for (std::size_t i = 0; i < out.trace.size(); ++i)
        worst = std::max(worst, out.trace.disagreement_x[i] /
                                    envelope[static_cast<std::size_t>(out.trace.t[i] - 1)]);
      ev.value = worst;
      ev.threshold = 1.0;
      ev.pass = worst <= 1.0;
    }
    out.verdicts.push_back(ev);

    EnvelopeVerdict inc;
    inc.name = "iterate_increment_bound";
    inc.applicable = check_sure_bounds;
    if (inc.applicable) {
      inc.value = worst_increment_ratio;
      inc.threshold = 1.0;
      inc.pass = worst_increment_ratio <= 1.0;
    }
    out.verdicts.push_back(inc);

    EnvelopeVerdict gapb;
    gapb.name = "consensus_gap_bound";
    gapb.applicable = true;
    gapb.value = out.trace.objective_gap.back();
    gapb.threshold = bounds->consensus_gap(T);
    gapb.pass = gapb.value <= gapb.threshold;
    out.verdicts.push_back(gapb);

    if (c.run.record_bounds) {
      out.bound_disagreement = bounds->disagreement_exact_series(T);
      out.bound_gap.resize(static_cast<std::size_t>(T));
      for (long t = 1; t <= T; ++t)
        out.bound_gap[static_cast<std::size_t>(t - 1)] = bounds->consensus_gap(t);
    }
  }

  EnvelopeVerdict sign;
  sign.name = "gap_nonnegative";
  sign.applicable = true;
  double min_gap = std::numeric_limits<double>::infinity();
  for (double g : out.trace.objective_gap) min_gap = std::min(min_gap, g);
  sign.value = min_gap;
  sign.threshold = -1e-8;
  sign.pass = min_gap >= -1e-8;
  out.verdicts.push_back(sign);

  return out;
}

inline void write_trace_csv(std::ostream& os, const RunTrace& trace,
                            const std::vector<double>& bound_disagreement = {},
                            const std::vector<double>& bound_gap = {}) {
  const bool with_bounds = !bound_disagreement.empty();
  os << "t,alpha,obj_gap,disagreement_y,disagreement_x,max_delay";
  if (with_bounds) os << ",bound_disagreement,bound_gap";
  os << "\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << trace.t[i] << ',' << format_double(trace.alpha[i]) << ','
       << format_double(trace.objective_gap[i]) << ','
       << format_double(trace.disagreement_y_sq[i]) << ','
       << format_double(trace.disagreement_x[i]) << ',' << trace.max_delay[i];
    if (with_bounds) {
      const auto idx = static_cast<std::size_t>(trace.t[i] - 1);
      os << ',' << format_double(bound_disagreement[idx]) << ',' << format_double(bound_gap[idx]);
    }
    os << "\n";
  }
}

inline void write_delays_csv(std::ostream& os, const RunTrace& trace) {
  if (trace.node_delays.empty()) return;
  os << "t";
  for (std::size_t i = 0; i < trace.node_delays.front().size(); ++i) os << ",node" << i;
  os << "\n";
  for (std::size_t r = 0; r < trace.node_delays.size(); ++r) {
    os << trace.t[r];
    for (int d : trace.node_delays[r]) os << ',' << d;
    os << "\n";
  }
}

// Aggregated experiment over run.seed_count replicate seeds. The trace of
// the first replicate is kept; final metrics are averaged across replicates.
struct ExperimentResult {
  SingleRunResult first;
  int replicates = 1;
  double mean_final_gap = 0.0;
  double mean_final_disagreement_sq = 0.0;
};

inline std::uint64_t replicate_seed(std::uint64_t base, int replicate) {
  return stream_key(base, "replicate", static_cast<std::uint64_t>(replicate));
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  if (c.run.seed_count < 1) throw ConfigError("config: field 'run.seed_count' must be >= 1");
  ExperimentResult out;
  out.replicates = c.run.seed_count;
  for (int r = 0; r < c.run.seed_count; ++r) {
    SingleRunResult one = run_single(c, replicate_seed(c.run.seed, r));
    out.mean_final_gap += one.trace.objective_gap.back() / c.run.seed_count;
    out.mean_final_disagreement_sq += one.trace.disagreement_y_sq.back() / c.run.seed_count;
    if (r == 0) out.first = std::move(one);
  }
  return out;
}

inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
  if (const char* env = std::getenv("DCGD_OUTPUT_DIR"); env && *env)
    return std::filesystem::path(env);
  return std::filesystem::path(c.run.output_dir);
}

// write-then-rename so concurrent sweep workers never expose partial files
template <class WriteFn>
void write_file_atomic(const std::filesystem::path& path, WriteFn&& fn) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    fn(os);
  }
  std::filesystem::rename(tmp, path);
}

inline void write_summary(std::ostream& os, const ExperimentConfig& c,
                          const ExperimentResult& res) {
  const auto& one = res.first;
  os << "experiment " << c.run.tag << "\n";
  os << "nodes " << one.trace.final_x.rows() << "\n";
  os << "iterations " << c.run.iterations << "\n";
  os << "replicates " << res.replicates << "\n";
  os << "lambda " << format_double(one.lambda) << "\n";
  os << "eta " << format_double(one.eta) << "\n";
  os << "reference_value " << format_double(one.reference.value) << " converged "
     << (one.reference.converged ? "yes" : "no") << " gradient_map "
     << format_double(one.reference.gradient_map_norm) << "\n";
  os << "final_gap " << format_double(one.trace.objective_gap.back()) << "\n";
  os << "final_disagreement " << format_double(one.trace.disagreement_y_sq.back()) << "\n";
  os << "mean_final_gap " << format_double(res.mean_final_gap) << "\n";
  os << "mean_final_disagreement " << format_double(res.mean_final_disagreement_sq) << "\n";
  os << "stale_regime_start " << one.stale_regime_start << "\n";
  if (one.disagreement_slope)
    os << "disagreement_slope " << format_double(one.disagreement_slope->slope) << "\n";
  else
    os << "disagreement_slope unavailable\n";
  if (one.gap_slope)
    os << "gap_slope " << format_double(one.gap_slope->slope) << "\n";
  else
    os << "gap_slope unavailable\n";
  if (!std::isnan(one.image_rel_error))
    os << "image_rel_error " << format_double(one.image_rel_error) << "\n";
  for (const auto& v : one.verdicts) {
    os << "check " << v.name << " ";
    if (!v.applicable)
      os << "n/a\n";
    else
      os << (v.pass ? "pass" : "FAIL") << " value " << format_double(v.value) << " vs "
         << format_double(v.threshold) << "\n";
  }
}

inline void write_experiment_files(const ExperimentConfig& c, const ExperimentResult& res) {
  const auto dir = resolve_output_dir(c);
  write_file_atomic(dir / (c.run.tag + "_trace.csv"), [&](std::ostream& os) {
    write_trace_csv(os, res.first.trace, res.first.bound_disagreement, res.first.bound_gap);
  });
  write_file_atomic(dir / (c.run.tag + "_summary.txt"),
                    [&](std::ostream& os) { write_summary(os, c, res); });
  if (!res.first.trace.node_delays.empty())
    write_file_atomic(dir / (c.run.tag + "_delays.csv"),
                      [&](std::ostream& os) { write_delays_csv(os, res.first.trace); });
}

// ----- sweep -----

struct SweepCell {
  int delay_bound = 0;
  double sigma = 0.0;
  int size = 0;
  std::string label;
  bool ok = false;
  std::string error;
  ExperimentResult result;
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

inline ExperimentConfig apply_cell(const ExperimentConfig& base, int delay_bound, double sigma,
                                   int size) {
  ExperimentConfig c = base;
  if (delay_bound <= 0)
    c.delay = {};  // kind none
  else {
    c.delay.kind = "uniform";
    c.delay.bound = delay_bound;
  }
  c.run.sigma = sigma;
  if (size > 0) {
    if (c.topology.kind == "lattice2d") {
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(size))));
      if (side * side != size)
        throw ConfigError("config: sweep size " + std::to_string(size) +
                          " is not a perfect square for a 2d lattice");
      c.topology.rows = side;
      c.topology.cols = side;
    } else {
      c.topology.m = size;
    }
  }
  return c;
}

inline SweepResult sweep(const ExperimentConfig& base) {
  std::vector<int> bounds = base.sweep.delay_bounds;
  std::vector<double> sigmas = base.sweep.sigmas;
  std::vector<int> sizes = base.sweep.sizes;
  if (bounds.empty())
    bounds = {base.delay.kind == "none" ? 0 : base.delay.bound};
  if (sigmas.empty()) sigmas = {base.run.sigma};
  if (sizes.empty()) sizes = {0};

  SweepResult out;
  for (int b : bounds)
    for (double s : sigmas)
      for (int size : sizes) {
        SweepCell cell;
        cell.delay_bound = b;
        cell.sigma = s;
        cell.size = size;
        std::ostringstream label;
        label << "B" << b << "_sigma" << format_double(s);
        if (size > 0) label << "_m" << size;
        cell.label = label.str();
        out.cells.push_back(std::move(cell));
      }

  // one worker per cell, capped by the hardware; cells are independent and
  // their seeds derive from the base seed plus the cell index
  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t workers =
      std::min<std::size_t>(out.cells.size(), hw ? hw : 2);
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= out.cells.size()) return;
      SweepCell& cell = out.cells[i];
      try {
        ExperimentConfig c = apply_cell(base, cell.delay_bound, cell.sigma, cell.size);
        c.run.seed = stream_key(base.run.seed, "cell", static_cast<std::uint64_t>(i));
        c.run.tag = base.run.tag + "_" + cell.label;
        cell.result = run_experiment(c);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
      }
    }
  };
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return out;
}

// Comparison CSV aligned on the iteration index: per cell one gap and one
// disagreement column from the first replicate.
inline void write_sweep_csv(std::ostream& os, const SweepResult& sr) {
  os << "t";
  for (const auto& cell : sr.cells)
    if (cell.ok) os << ",gap_" << cell.label << ",disagreement_" << cell.label;
  os << "\n";
  std::size_t rows = 0;
  for (const auto& cell : sr.cells)
    if (cell.ok) rows = std::max(rows, cell.result.first.trace.size());
  for (std::size_t r = 0; r < rows; ++r) {
    os << (r + 1);
    for (const auto& cell : sr.cells) {
      if (!cell.ok) continue;
      const auto& tr = cell.result.first.trace;
      if (r < tr.size())
        os << ',' << format_double(tr.objective_gap[r]) << ','
           << format_double(tr.disagreement_y_sq[r]);
      else
        os << ",,";
    }
    os << "\n";
  }
}

// ----- timing -----

struct TimingResult {
  TimingComparison comparison;
  double initial_gap = 0.0;
  long ticks = 0;
};

inline TimingResult timing_compare(const ExperimentConfig& c) {
  const NetworkTopology topo = build_topology(c);
  const MixingMatrix mixing = build_mixing(c, topo);
  // the wall-clock comparison runs on exact gradients
  ExperimentConfig cc = c;
  cc.run.sigma = 0.0;
  const Problem problem = build_problem(cc, topo.node_count, c.run.seed);
  const ReferenceSolution ref = centralized_reference(problem);

  ComputeTimeModel ct;
  ct.lo = c.timing.compute_lo;
  ct.hi = c.timing.compute_hi;
  if (c.timing.straggler_node >= 0) {
    if (c.timing.straggler_node >= topo.node_count)
      throw ConfigError("config: field 'timing.straggler_node' is out of range");
    ct.node_scale.assign(static_cast<std::size_t>(topo.node_count), 1.0);
    ct.node_scale[static_cast<std::size_t>(c.timing.straggler_node)] = c.timing.straggler_factor;
  }

  TimingOptions to;
  to.comm_interval = c.timing.comm_interval;
  to.budget = c.timing.budget;
  to.policy = StepSizePolicy{problem.max_lipschitz(), c.run.eta};
  to.seed = c.run.seed;
  to.reference_value = ref.value;

  TimingResult out;
  out.comparison = async_timing_run(problem, mixing, ct, to);
  out.initial_gap = problem.total_value(Eigen::VectorXd::Zero(problem.dim())) - ref.value;
  out.ticks = static_cast<long>(c.timing.budget / c.timing.comm_interval);
  return out;
}

// rows on the asynchronous tick grid; the synchronous gap is the step
// function of its last completed iteration
inline void write_timing_csv(std::ostream& os, const TimingResult& res) {
  os << "wall_clock,sync_gap,async_gap\n";
  const auto& sync = res.comparison.synchronous;
  const auto& async = res.comparison.asynchronous;
  std::size_t si = 0;
  double sync_gap = res.initial_gap;
  for (std::size_t i = 0; i < async.wall_clock.size(); ++i) {
    const double now = async.wall_clock[i];
    while (si < sync.wall_clock.size() && sync.wall_clock[si] <= now)
      sync_gap = sync.objective_gap[si++];
    os << format_double(now) << ',' << format_double(sync_gap) << ','
       << format_double(async.objective_gap[i]) << "\n";
  }
}

}  // namespace dcgd
