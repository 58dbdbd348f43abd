#include "klpool/cli.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "klpool/centroid.hpp"
#include "klpool/combiner.hpp"
#include "klpool/ebayes.hpp"
#include "klpool/errors.hpp"
#include "klpool/io.hpp"

namespace klpool::cli {
namespace {

using nlohmann::json;
using io::format_number;

struct RunConfig {
  std::string input;
  std::string output;
  std::string format = "csv";
  std::string summary;
  std::string truth;
  double lower = 0.0;
  double upper = 1.0;
  double pi0_lower = 0.8;
  std::size_t bins = 20;
  double lambda = 0.5;
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::uint64_t seed = 1;
  double grid_step = 0.01;
  std::vector<double> simulate;
  bool bits = false;
  // figure-means
  double from = 1e-3;
  double to = 0.2;
  double partner = 0.2;
  std::size_t points = 101;
};

SolverOptions solver_options(const RunConfig& c) {
  return SolverOptions{c.tol, c.max_iter, false};
}

double display_divergence(const RunConfig& c, double nats) {
  return c.bits ? nats / std::log(2.0) : nats;
}

void emit(const RunConfig& c, std::ostream& out, const std::string& text) {
  if (c.output.empty() || c.output == "-") {
    out << text;
  } else {
    io::write_text(c.output, text);
  }
}

void validate(const RunConfig& c) {
  if (!(c.tol > 0.0)) throw InputError("--tol must be positive");
  if (c.max_iter == 0) throw InputError("--max-iter must be positive");
  if (c.format != "csv" && c.format != "json") throw InputError("--format must be csv or json");
}

std::string json_text(const json& doc) { return doc.dump(2) + "\n"; }

ebayes::SimulationConfig simulation_from(const RunConfig& c) {
  if (c.simulate.size() != 5) throw InputError("--simulate takes N n pi0 effect_sd noise_sd");
  auto count = [](double v, const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) throw InputError(std::string("--simulate ") + what + " must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  ebayes::SimulationConfig s;
  s.genes = count(c.simulate[0], "N");
  s.replicates = count(c.simulate[1], "n");
  s.pi0 = c.simulate[2];
  s.effect_sd = c.simulate[3];
  s.noise_sd = c.simulate[4];
  s.seed = c.seed;
  return s;
}

int cmd_combine_probs(const RunConfig& c, std::ostream& out) {
  if (c.input.empty()) throw InputError("combine-probs needs --input");
  std::vector<double> probs = io::read_probabilities(c.input);
  if (!(0.0 <= c.lower && c.lower <= c.upper && c.upper <= 1.0)) {
    throw InputError("--lower/--upper must satisfy 0 <= lower <= upper <= 1");
  }
  BinaryCombination r = combine_binary(probs, Interval{c.lower, c.upper});
  if (c.format == "json") {
    json doc = {{"lo", r.lo},
                {"hi", r.hi},
                {"w_plus", r.w_plus},
                {"p_plus", r.p_plus},
                {"value", display_divergence(c, r.value)},
                {"unit", c.bits ? "bits" : "nats"},
                {"plausible", r.plausible}};
    emit(c, out, json_text(doc));
  } else {
    std::ostringstream s;
    s << "lo,hi,w_plus,p_plus,value\n"
      << format_number(r.lo) << ',' << format_number(r.hi) << ',' << format_number(r.w_plus) << ','
      << format_number(r.p_plus) << ',' << format_number(display_divergence(c, r.value)) << '\n';
    emit(c, out, s.str());
  }
  return kSuccess;
}

template <class Dist>
std::string capacity_output(const RunConfig& c, std::span<const Dist> family) {
  CentroidResult<Dist> r = induced_weighting<Dist>(family, solver_options(c));
  auto weights = r.weights.values();
  auto centroid = coordinates(r.centroid);
  if (c.format == "json") {
    json doc = {{"weights", std::vector<double>(weights.begin(), weights.end())},
                {"centroid", std::vector<double>(centroid.begin(), centroid.end())},
                {"value", display_divergence(c, r.value)},
                {"gap", display_divergence(c, r.gap)},
                {"unit", c.bits ? "bits" : "nats"},
                {"iterations", r.iterations}};
    return json_text(doc);
  }
  std::ostringstream s;
  s << "quantity,index,value\n";
  for (std::size_t i = 0; i < weights.size(); ++i) s << "weight," << i << ',' << format_number(weights[i]) << '\n';
  for (std::size_t k = 0; k < centroid.size(); ++k) s << "centroid," << k << ',' << format_number(centroid[k]) << '\n';
  s << "value,," << format_number(display_divergence(c, r.value)) << '\n';
  s << "gap,," << format_number(display_divergence(c, r.gap)) << '\n';
  s << "iterations,," << r.iterations << '\n';
  return s.str();
}

int cmd_capacity(RunConfig c, std::ostream& out, bool format_given) {
  if (c.input.empty()) throw InputError("capacity needs --input");
  if (!format_given) c.format = "json";
  io::FamilyJson family = io::read_family(c.input);
  emit(c, out,
       family.product ? capacity_output<BernoulliProduct>(c, family.products)
                      : capacity_output<FiniteDistribution>(c, family.finite));
  return kSuccess;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  ebayes::SimulatedData data = ebayes::simulate_dataset(simulation_from(c));
  std::ostringstream s;
  io::write_expression_csv(c.output.empty() ? "-" : c.output, data.matrix);
  if (!c.truth.empty()) {
    s << "gene_id,alternative\n";
    for (std::size_t j = 0; j < data.alternative.size(); ++j) {
      s << data.matrix.gene_ids()[j] << ',' << (data.alternative[j] ? 1 : 0) << '\n';
    }
    io::write_text(c.truth, s.str());
  }
  (void)out;
  return kSuccess;
}

int cmd_combine_lfdr(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.input.empty() == c.simulate.empty()) {
    throw InputError("combine-lfdr needs exactly one of --input or --simulate");
  }
  if (!(c.pi0_lower > 0.0 && c.pi0_lower < 1.0)) throw InputError("--pi0-lower must lie in (0,1)");
  if (c.bins == 0) throw InputError("--bins must be positive");
  if (!(c.lambda >= 0.0 && c.lambda < 1.0)) throw InputError("--lambda must lie in [0,1)");

  json metadata;
  std::optional<ebayes::ExpressionMatrix> matrix;
  if (!c.simulate.empty()) {
    ebayes::SimulationConfig sim = simulation_from(c);
    matrix = ebayes::simulate_dataset(sim).matrix;
    metadata["simulation"] = {{"genes", sim.genes},         {"replicates", sim.replicates},
                              {"pi0", sim.pi0},             {"effect_sd", sim.effect_sd},
                              {"noise_sd", sim.noise_sd},   {"seed", sim.seed}};
  } else {
    io::ExpressionCsv csv = io::read_expression_csv(c.input);
    metadata["dropped_incomplete_genes"] = csv.dropped_incomplete;
    matrix = std::move(csv.matrix);
  }
  const ebayes::ExpressionMatrix& x = *matrix;

  ebayes::TestResult tests = ebayes::t_test(x);
  ebayes::HistogramOptions hist{c.bins, c.lambda};
  ebayes::NullFit fit;
  std::vector<ebayes::LfdrVector> estimates;
  estimates.push_back(ebayes::lfdr_theoretical(tests.p_value, tests.t_stat, hist));
  estimates.push_back(ebayes::lfdr_empirical(tests.p_value, tests.t_stat, hist, &fit));
  estimates.push_back(ebayes::q_values(tests.p_value));
  ebayes::LfdrVector bound = ebayes::lfdr_lower_bound(tests.t_stat, x.replicates(), c.pi0_lower);

  std::optional<ebayes::LfdrCombination> combined;
  try {
    combined = ebayes::combine_lfdr(estimates, bound, solver_options(c));
  } catch (const EmptyIntersectionError& e) {
    err << "every LFDR estimate violates the lower bound at some gene:\n";
    for (const auto& est : estimates) {
      std::size_t violations = 0;
      for (std::size_t j = 0; j < est.values.size(); ++j) {
        if (est.values[j] < bound.values[j] - kBoxSlack) ++violations;
      }
      err << "  " << ebayes::to_string(est.method) << ": " << violations << " gene(s) below the bound\n";
    }
    throw;
  }
  const ebayes::LfdrCombination& combo = *combined;

  // How often each surviving method is the per-gene minimum or maximum.
  json binds = json::object();
  for (std::size_t s = 0; s < combo.surviving.size(); ++s) {
    std::size_t method = 0;
    while (estimates[method].method != combo.surviving[s]) ++method;
    std::size_t at_min = 0;
    std::size_t at_max = 0;
    for (std::size_t j = 0; j < x.genes(); ++j) {
      double lo = 1.0;
      double hi = 0.0;
      for (auto m : combo.surviving) {
        for (const auto& e : estimates) {
          if (e.method == m) {
            lo = std::min(lo, e.values[j]);
            hi = std::max(hi, e.values[j]);
          }
        }
      }
      if (estimates[method].values[j] == lo) ++at_min;
      if (estimates[method].values[j] == hi) ++at_max;
    }
    binds[std::string(ebayes::to_string(combo.surviving[s]))] = {{"min", at_min}, {"max", at_max}};
  }

  json weights = json::object();
  for (std::size_t s = 0; s < combo.surviving.size(); ++s) {
    weights[std::string(ebayes::to_string(combo.surviving[s]))] = combo.weights[s];
  }
  std::vector<std::string> excluded;
  for (auto m : combo.excluded) excluded.emplace_back(ebayes::to_string(m));
  std::vector<std::string> diagnostics;
  for (const auto& e : estimates) {
    for (const auto& d : e.diagnostics) diagnostics.push_back(std::string(ebayes::to_string(e.method)) + ": " + d);
  }
  for (const auto& d : bound.diagnostics) diagnostics.push_back("lower_bound: " + d);

  metadata["weights"] = weights;
  metadata["excluded_methods"] = excluded;
  metadata["genes"] = x.genes();
  metadata["replicates"] = x.replicates();
  metadata["binds"] = binds;
  metadata["minimax_value"] = display_divergence(c, combo.result.value);
  metadata["unit"] = c.bits ? "bits" : "nats";
  metadata["empirical_null"] = {{"mean", fit.mean}, {"sd", fit.sd}, {"pi0", fit.pi0}};
  metadata["theoretical_null_pi0"] = ebayes::storey_pi0(tests.p_value, c.lambda);
  metadata["config"] = {{"pi0_lower", c.pi0_lower}, {"bins", c.bins},         {"lambda", c.lambda},
                        {"tol", c.tol},             {"max_iter", c.max_iter}, {"seed", c.seed}};
  metadata["diagnostics"] = diagnostics;

  const auto& ids = x.gene_ids();
  if (c.format == "json") {
    json genes = json::array();
    for (std::size_t j = 0; j < x.genes(); ++j) {
      genes.push_back({{"gene_id", ids[j]},
                       {"lfdr_theoretical", estimates[0].values[j]},
                       {"lfdr_empirical", estimates[1].values[j]},
                       {"qvalue", estimates[2].values[j]},
                       {"lower_bound", bound.values[j]},
                       {"combined", combo.combined[j]}});
    }
    emit(c, out, json_text({{"genes", genes}, {"metadata", metadata}}));
  } else {
    std::ostringstream s;
    s << "gene_id,lfdr_theoretical,lfdr_empirical,qvalue,lower_bound,combined\n";
    for (std::size_t j = 0; j < x.genes(); ++j) {
      s << ids[j] << ',' << format_number(estimates[0].values[j]) << ','
        << format_number(estimates[1].values[j]) << ',' << format_number(estimates[2].values[j])
        << ',' << format_number(bound.values[j]) << ',' << format_number(combo.combined[j]) << '\n';
    }
    emit(c, out, s.str());
  }

  const std::string summary = json_text(metadata);
  if (!c.summary.empty()) {
    io::write_text(c.summary, summary);
  } else if (!c.output.empty() && c.output != "-") {
    out << summary;
  } else {
    err << summary;
  }
  return kSuccess;
}

int cmd_figure_weight_surface(const RunConfig& c, std::ostream& out) {
  if (!(c.grid_step > 0.0 && c.grid_step <= 0.5)) throw InputError("--grid-step must lie in (0, 0.5]");
  const auto cells = static_cast<std::size_t>(std::floor(1.0 / c.grid_step + 1e-9));
  std::vector<double> grid;
  for (std::size_t k = 1; k <= cells; ++k) {
    double p = static_cast<double>(k) * c.grid_step;
    if (p < 1.0 - 1e-12) grid.push_back(p);
  }
  std::ostringstream s;
  json rows = json::array();
  if (c.format == "csv") s << "p_min,p_max,w_plus\n";
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      const double pair[] = {grid[a], grid[b]};
      const double w = combine_binary(pair).w_plus;
      if (c.format == "csv") {
        s << format_number(grid[a]) << ',' << format_number(grid[b]) << ',' << format_number(w) << '\n';
      } else {
        rows.push_back({{"p_min", grid[a]}, {"p_max", grid[b]}, {"w_plus", w}});
      }
    }
  }
  emit(c, out, c.format == "csv" ? s.str() : json_text(rows));
  return kSuccess;
}

int cmd_figure_means(const RunConfig& c, std::ostream& out) {
  if (!(0.0 < c.from && c.from < c.to && c.to < 1.0)) throw InputError("--from/--to must satisfy 0 < from < to < 1");
  if (!(c.partner > 0.0 && c.partner < 1.0)) throw InputError("--partner must lie in (0,1)");
  if (c.points < 2) throw InputError("--points must be at least 2");
  std::ostringstream s;
  json rows = json::array();
  if (c.format == "csv") s << "x,p1,p2,arithmetic,geometric,harmonic,game\n";
  for (std::size_t k = 0; k < c.points; ++k) {
    // Log-spaced abscissa, exact at both ends.
    const double t = static_cast<double>(k) / static_cast<double>(c.points - 1);
    double x = k + 1 == c.points ? c.to : c.from * std::pow(c.to / c.from, t);
    const double p1 = x;
    const double p2 = c.partner;
    const double arithmetic = 0.5 * (p1 + p2);
    const double geometric = std::sqrt(p1 * p2);
    const double harmonic = 2.0 * p1 * p2 / (p1 + p2);
    const double pair[] = {p1, p2};
    const double game = combine_binary(pair).p_plus;
    if (c.format == "csv") {
      s << format_number(x) << ',' << format_number(p1) << ',' << format_number(p2) << ','
        << format_number(arithmetic) << ',' << format_number(geometric) << ','
        << format_number(harmonic) << ',' << format_number(game) << '\n';
    } else {
      rows.push_back({{"x", x},
                      {"p1", p1},
                      {"p2", p2},
                      {"arithmetic", arithmetic},
                      {"geometric", geometric},
                      {"harmonic", harmonic},
                      {"game", game}});
    }
  }
  emit(c, out, c.format == "csv" ? s.str() : json_text(rows));
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Combine conflicting probability distributions by their minimax-divergence centroid", "klpool"};
  app.require_subcommand(1);
  RunConfig c;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--input", c.input, "Input file");
    sub->add_option("--output", c.output, "Output file (stdout when omitted)");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--tol", c.tol, "Solver tolerance in nats");
    sub->add_option("--max-iter", c.max_iter, "Capacity-iteration limit");
    sub->add_flag("--bits", c.bits, "Report divergences in bits instead of nats");
  };

  auto* probs = app.add_subcommand("combine-probs", "Combine probabilities of one event");
  common(probs);
  probs->add_option("--lower", c.lower, "Lower end of the plausible interval");
  probs->add_option("--upper", c.upper, "Upper end of the plausible interval");

  auto* lfdr = app.add_subcommand("combine-lfdr", "Estimate and combine local false discovery rates");
  common(lfdr);
  lfdr->add_option("--pi0-lower", c.pi0_lower, "Lower bound on the proportion of true nulls");
  lfdr->add_option("--bins", c.bins, "Histogram bins");
  lfdr->add_option("--lambda", c.lambda, "Storey lambda");
  lfdr->add_option("--seed", c.seed, "Simulation seed");
  lfdr->add_option("--simulate", c.simulate, "Simulate N n pi0 effect_sd noise_sd")->expected(5);
  lfdr->add_option("--summary", c.summary, "Write the run summary JSON here");

  auto* capacity = app.add_subcommand("capacity", "Centroid and induced weights of a family");
  common(capacity);

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic expression matrix");
  common(simulate);
  simulate->add_option("--simulate", c.simulate, "N n pi0 effect_sd noise_sd")->expected(5)->required();
  simulate->add_option("--seed", c.seed, "Random seed");
  simulate->add_option("--truth", c.truth, "Write per-gene truth labels here");

  auto* surface = app.add_subcommand("figure-weight-surface", "Optimal weight over pairs of probabilities");
  common(surface);
  surface->add_option("--grid-step", c.grid_step, "Grid spacing in (0, 0.5]");

  auto* means = app.add_subcommand("figure-means", "Classical means against the game combination");
  common(means);
  means->add_option("--from", c.from, "Smallest abscissa");
  means->add_option("--to", c.to, "Largest abscissa");
  means->add_option("--partner", c.partner, "Probability combined with each abscissa");
  means->add_option("--points", c.points, "Number of abscissae");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    validate(c);
    if (*probs) return cmd_combine_probs(c, out);
    if (*lfdr) return cmd_combine_lfdr(c, out, err);
    if (*capacity) return cmd_capacity(c, out, capacity->count("--format") > 0);
    if (*simulate) return cmd_simulate(c, out);
    if (*surface) return cmd_figure_weight_surface(c, out);
    if (*means) return cmd_figure_means(c, out);
  } catch (const EmptyIntersectionError& e) {
    err << "error: " << e.what() << '\n';
    return kEmptyIntersection;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace klpool::cli
