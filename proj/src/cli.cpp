#include "loopforge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "loopforge/analysis.hpp"
#include "loopforge/coupling.hpp"
#include "loopforge/decompose.hpp"
#include "loopforge/io.hpp"
#include "loopforge/soup.hpp"
#include "loopforge/walks.hpp"

namespace loopforge {

int default_threads() {
  if (const char* env = std::getenv("LOOPFORGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

struct Options {
  // shared by every subcommand
  int dim = 3;
  double radius = 4.0;
  double lambda = 1.0;
  double epsilon = 0.25;
  double eta = 0.1;
  double theta = 1.5;
  std::uint64_t samples = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string convention = "open";

  // per-subcommand extras
  std::string in;
  std::int64_t max_half_length = 0;
  bool contained_only = false;
  std::int64_t max_generation = 64;
  int levels = 10;
  bool small_loops = false;
  double scale = 8.0;
  std::int64_t length = 64;
  std::vector<double> radii{32, 64, 128, 256, 512};
  std::vector<double> ms{4, 8, 16, 32};
  double truncation = 8.0;
  std::vector<double> epsilons;
  int power = 2;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  std::uint64_t inner_samples = 64;
  std::int64_t spacing = 0;
  std::vector<double> scales{0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
  std::int64_t max_n = 64;

  BoundaryConvention conv() const {
    return convention == "closed" ? BoundaryConvention::closed : BoundaryConvention::open;
  }
};

std::string fmt(double x) { return format_double(x); }
std::string fmt(std::uint64_t x) { return std::to_string(x); }
std::string fmt(std::int64_t x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }

std::vector<std::string> site_cells(const Site& s) {
  std::vector<std::string> c;
  for (int k = 0; k < s.dim; ++k) c.push_back(std::to_string(s[k]));
  return c;
}

std::vector<std::string> coord_header(int d) {
  std::vector<std::string> h;
  for (int k = 0; k < d; ++k) h.push_back("x" + std::to_string(k));
  return h;
}

using Runner = std::function<void(const Options&, const Executor&, std::ostream&)>;

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--dim", o.dim, "lattice dimension")->check(CLI::Range(1, kMaxDim));
  sub->add_option("--radius", o.radius, "domain radius n (lattice units)");
  sub->add_option("--lambda", o.lambda, "soup intensity");
  sub->add_option("--epsilon", o.epsilon, "scale parameter eps");
  sub->add_option("--eta", o.eta, "hittability exponent");
  sub->add_option("--theta", o.theta, "large-loop exponent");
  sub->add_option("--samples", o.samples, "Monte Carlo samples");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--threads", o.threads, "worker threads (default: LOOPFORGE_THREADS, else hardware)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output file (default: stdout, no manifest)");
  sub->add_option("--convention", o.convention, "ball boundary convention")
      ->check(CLI::IsMember({"open", "closed"}));
}

// ---------------------------------------------------------------------------

void cmd_sample_lerw(const Options& o, const Executor& exec, std::ostream& out) {
  WalkConfig cfg{o.dim, o.radius, o.seed, o.conv()};
  cfg.validate();
  std::vector<std::string> lines(o.samples);
  exec.for_each(o.samples, [&](std::size_t i) {
    Rng rng(o.seed, i);
    lines[i] = path_record(sample_lerw(cfg, rng));
  });
  for (const auto& l : lines) out << l << '\n';
}

void cmd_sample_soup(const Options& o, const Executor& exec, std::ostream& out) {
  RwSoupConfig cfg;
  cfg.dim = o.dim;
  cfg.domain_radius = o.radius;
  cfg.lambda = o.lambda;
  cfg.max_half_length = o.max_half_length;
  cfg.seed = o.seed;
  cfg.convention = o.conv();
  cfg.keep_uncontained = !o.contained_only;
  const RwSoupSampler sampler(cfg);
  constexpr std::size_t kBlock = 64;
  const std::size_t roots = sampler.roots().size();
  const std::size_t blocks = (roots + kBlock - 1) / kBlock;
  std::vector<std::string> chunks(blocks);
  exec.for_each(blocks, [&](std::size_t b) {
    Rng rng(o.seed, b);
    const auto soup = sampler.sample_block(b * kBlock, std::min(roots, (b + 1) * kBlock), rng);
    std::string text;
    for (const auto& loop : soup.loops) text += discrete_loop_record(loop) + '\n';
    chunks[b] = std::move(text);
  });
  for (const auto& c : chunks) out << c;
}

void cmd_sample_brownian_soup(const Options& o, const Executor&, std::ostream& out) {
  BrownianSoupConfig cfg;
  cfg.dim = o.dim;
  cfg.box_radius = o.radius;
  cfg.lambda = o.lambda;
  cfg.max_generation = o.max_generation;
  cfg.levels = o.levels;
  cfg.include_small_loops = o.small_loops;
  Rng rng(o.seed, 0);
  for (const auto& loop : sample_brownian_soup(cfg, rng)) out << continuous_loop_record(loop) << '\n';
}

void cmd_verify_decomposition(const Options& o, const Executor& exec, std::ostream& out) {
  const auto check = verify_decomposition(o.dim, o.radius, o.samples, o.seed, o.conv(), exec);
  auto header = coord_header(o.dim);
  for (const char* h : {"mc_estimate", "exact", "std_err", "z"}) header.emplace_back(h);
  CsvWriter csv(out, header);
  for (const auto& s : check.sites) {
    auto row = site_cells(s.site);
    for (double v : {s.estimate, s.exact, s.std_error, s.z}) row.push_back(fmt(v));
    csv.row(row);
  }
}

void cmd_couple_soups(const Options& o, const Executor& exec, std::ostream& out) {
  CoupledSoupConfig cfg;
  cfg.dim = o.dim;
  cfg.box_radius = o.radius;
  cfg.lambda = o.lambda;
  cfg.scale = o.scale;
  cfg.theta = o.theta;
  cfg.levels = o.levels;
  cfg.max_half_length = o.max_half_length;
  Rng rng(o.seed, 0);
  const auto soups = couple_soups(cfg, rng, exec);
  const auto& r = soups.report;
  nlohmann::json j;
  j["success"] = r.success;
  j["fitted_constant"] = r.fitted_constant;
  j["envelope"] = r.envelope;
  j["grid_points_min"] = r.grid_points_min;
  j["discrete_loops"] = soups.discrete.loops.size();
  j["brownian_loops"] = soups.brownian.size();
  j["small_unmatched"] = r.small_unmatched;
  j["unmatched_discrete"] = r.unmatched_discrete;
  j["unmatched_brownian"] = r.unmatched_brownian;
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    nlohmann::json root = nlohmann::json::array();
    for (int k = 0; k < p.root.dim; ++k) root.push_back(p.root[k]);
    j["pairs"].push_back({{"discrete_id", p.discrete_id},
                          {"brownian_id", p.brownian_id},
                          {"root", root},
                          {"half_length", p.half_length},
                          {"sup_distance", p.sup_distance},
                          {"duration_gap", p.duration_gap},
                          {"flagged", p.flagged}});
  }
  out << j.dump() << '\n';
}

void cmd_couple_bridge(const Options& o, const Executor& exec, std::ostream& out) {
  std::vector<std::pair<std::uint64_t, double>> results(o.samples);
  exec.for_each(o.samples, [&](std::size_t i) {
    Rng rng(o.seed, i);
    const auto pair =
        o.dim == 1 ? couple_bridge_1d(o.length, o.levels, rng) : couple_bridge(o.dim, o.length, o.levels, rng);
    results[i] = {pair.refinement, pair.sup_distance};
  });
  CsvWriter csv(out, {"sample", "d", "m", "refinement", "sup_distance"});
  for (std::size_t i = 0; i < results.size(); ++i)
    csv.row({fmt(static_cast<std::uint64_t>(i)), fmt(o.dim), fmt(o.length), fmt(results[i].first),
             fmt(results[i].second)});
}

void cmd_estimate_beta(const Options& o, const Executor& exec, std::ostream& out) {
  const auto b = estimate_beta(o.dim, o.radii, o.samples, o.seed, o.conv(), exec);
  CsvWriter csv(out, {"kind", "d", "n", "estimate", "stderr", "samples", "log_x", "log_y"});
  csv.row({"fit", fmt(o.dim), "", fmt(b.fit.slope), fmt(b.fit.std_error), fmt(o.samples), "", ""});
  for (std::size_t i = 0; i < b.radii.size(); ++i)
    csv.row({"point", fmt(o.dim), fmt(b.radii[i]), fmt(b.mean_lengths[i].estimate), fmt(b.mean_lengths[i].std_error),
             fmt(o.samples), fmt(b.fit.points[i].log_x), fmt(b.fit.points[i].log_y)});
}

void cmd_estimate_escape(const Options& o, const Executor& exec, std::ostream& out) {
  const auto reports = estimate_escape_profile(o.dim, o.ms, o.radius, o.truncation, o.samples, o.seed, exec);
  CsvWriter csv(out, {"d", "m", "n", "K", "estimate", "stderr", "samples"});
  for (std::size_t i = 0; i < reports.size(); ++i)
    csv.row({fmt(o.dim), fmt(o.ms[i]), fmt(o.radius), fmt(o.truncation), fmt(reports[i].estimate),
             fmt(reports[i].std_error), fmt(reports[i].samples)});
}

void cmd_scan_quasiloops(const Options& o, const Executor& exec, std::ostream& out) {
  if (!o.in.empty()) {
    std::ifstream f(o.in);
    if (!f) throw std::runtime_error("cannot read " + o.in);
    const auto paths = read_path_jsonl(f);
    const QuasiLoopQuery q{o.inner_radius, o.outer_radius};
    q.validate();
    std::vector<std::vector<Site>> centers(paths.size());
    exec.for_each(paths.size(), [&](std::size_t i) {
      const auto found = scan_quasi_loops(paths[i], q);
      centers[i].assign(found.begin(), found.end());
      std::sort(centers[i].begin(), centers[i].end());
    });
    const int d = paths.empty() ? o.dim : paths.front().dim();
    auto header = coord_header(d);
    header.insert(header.begin(), "path");
    CsvWriter csv(out, header);
    for (std::size_t i = 0; i < centers.size(); ++i)
      for (const auto& v : centers[i]) {
        auto row = site_cells(v);
        row.insert(row.begin(), fmt(static_cast<std::uint64_t>(i)));
        csv.row(row);
      }
    return;
  }
  std::vector<double> eps = o.epsilons;
  if (eps.empty()) eps.push_back(o.epsilon);
  const auto est = quasi_loop_probabilities(o.dim, o.radius, eps, o.power, o.samples, o.seed, exec);
  CsvWriter csv(out, {"d", "n", "eps", "M", "s", "r", "estimate", "stderr", "samples"});
  for (const auto& e : est)
    csv.row({fmt(o.dim), fmt(o.radius), fmt(e.epsilon), fmt(o.power), fmt(e.query.s), fmt(e.query.r),
             fmt(e.report.estimate), fmt(e.report.std_error), fmt(e.report.samples)});
}

void cmd_hittability(const Options& o, const Executor& exec, std::ostream& out) {
  HittabilityConfig cfg;
  cfg.dim = o.dim;
  cfg.n = o.radius;
  cfg.epsilon = o.epsilon;
  cfg.eta = o.eta;
  cfg.outer_samples = o.samples;
  cfg.inner_samples = o.inner_samples;
  cfg.grid_spacing = o.spacing;
  cfg.seed = o.seed;
  const auto r = hittability_scan(cfg, exec);
  CsvWriter csv(out, {"d", "n", "eps", "eta", "spacing", "inner", "estimate", "stderr", "samples", "points_tested"});
  csv.row({fmt(o.dim), fmt(o.radius), fmt(o.epsilon), fmt(o.eta), fmt(cfg.spacing()), fmt(o.inner_samples),
           fmt(r.failing_fraction.estimate), fmt(r.failing_fraction.std_error), fmt(r.failing_fraction.samples),
           fmt(r.points_tested)});
}

void cmd_box_dimension(const Options& o, const Executor& exec, std::ostream& out) {
  std::vector<LatticePath> paths;
  if (!o.in.empty()) {
    std::ifstream f(o.in);
    if (!f) throw std::runtime_error("cannot read " + o.in);
    paths = read_path_jsonl(f);
  } else {
    WalkConfig cfg{o.dim, o.radius, o.seed, o.conv()};
    cfg.validate();
    std::vector<std::unique_ptr<LatticePath>> sampled(o.samples);
    exec.for_each(o.samples, [&](std::size_t i) {
      Rng rng(o.seed, i);
      sampled[i] = std::make_unique<LatticePath>(sample_lerw(cfg, rng));
    });
    for (auto& p : sampled) paths.push_back(std::move(*p));
  }
  std::vector<ExponentFit> fits(paths.size());
  exec.for_each(paths.size(), [&](std::size_t i) {
    std::vector<std::vector<double>> pts;
    for (const auto& s : paths[i].sites()) {
      std::vector<double> p;
      for (int k = 0; k < s.dim; ++k) p.push_back(s[k] / o.radius);
      pts.push_back(std::move(p));
    }
    fits[i] = box_dimension(pts, o.scales);
  });
  CsvWriter csv(out, {"kind", "sample", "estimate", "stderr", "log_x", "log_y"});
  std::vector<double> slopes;
  for (const auto& f : fits) slopes.push_back(f.slope);
  if (!slopes.empty()) {
    const auto mean = mean_report(slopes);
    csv.row({"mean", "", fmt(mean.estimate), fmt(mean.std_error), "", ""});
  }
  for (std::size_t i = 0; i < fits.size(); ++i) {
    csv.row({"fit", fmt(static_cast<std::uint64_t>(i)), fmt(fits[i].slope), fmt(fits[i].std_error), "", ""});
    for (const auto& p : fits[i].points)
      csv.row({"point", fmt(static_cast<std::uint64_t>(i)), "", "", fmt(p.log_x), fmt(p.log_y)});
  }
}

void cmd_cut_points(const Options& o, const Executor& exec, std::ostream& out) {
  const auto s = cut_point_stats(o.dim, o.radius, o.samples, o.seed, o.conv(), exec);
  CsvWriter csv(out, {"d", "n", "estimate", "stderr", "samples", "violations"});
  csv.row({fmt(o.dim), fmt(o.radius), fmt(s.mean_count.estimate), fmt(s.mean_count.std_error),
           fmt(s.mean_count.samples), fmt(s.violations)});
}

void cmd_lclt_check(const Options& o, const Executor&, std::ostream& out) {
  const int d = o.dim;
  const auto consts = BlConstants::compute(d, o.max_n);
  const auto probs = return_probabilities(d, o.max_n);
  CsvWriter csv(out, {"n", "p2n", "ratio", "gap_n2", "q_brownian", "q_discrete", "implied_c"});
  for (std::int64_t n = 1; n <= o.max_n; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double nd = static_cast<double>(n);
    const double lead = 2.0 * std::pow(d / (4.0 * std::numbers::pi * nd), d / 2.0);
    const double ratio = probs[i] / lead;
    const double gap = std::abs(ratio - (1.0 - d / (8.0 * nd))) * nd * nd;
    const double implied = std::abs(consts.q[i] - consts.q_discrete[i]) * std::pow(nd, d / 2.0 + 3.0);
    csv.row({fmt(n), fmt(probs[i]), fmt(ratio), fmt(gap), fmt(consts.q[i]), fmt(consts.q_discrete[i]), fmt(implied)});
  }
}

struct Command {
  const char* name;
  const char* help;
  std::function<void(CLI::App*, Options&)> extras;
  Runner runner;
};

std::vector<Command> commands() {
  return {
      {"sample-lerw", "loop-erased walks to the domain boundary (JSONL paths)",
       [](CLI::App*, Options& o) { o.radius = 16; o.samples = 10; }, cmd_sample_lerw},
      {"sample-soup", "random walk loop soup on the bounding box of a ball (JSONL loops)",
       [](CLI::App* s, Options& o) {
         s->add_option("--max-half-length", o.max_half_length, "cutoff n_max (0: automatic)");
         s->add_flag("--contained-only", o.contained_only, "emit only loops inside the domain");
       },
       cmd_sample_soup},
      {"sample-brownian-soup", "Brownian loop soup on a box of lattice roots (JSONL loops)",
       [](CLI::App* s, Options& o) {
         o.radius = 2;
         s->add_option("--max-generation", o.max_generation, "largest duration window index");
         s->add_option("--levels", o.levels, "dyadic levels per loop")->check(CLI::Range(1, 24));
         s->add_flag("--small-loops", o.small_loops, "include loops of duration below r_d");
       },
       cmd_sample_brownian_soup},
      {"verify-decomposition", "per-site trace probabilities of the loop decomposition vs exact (CSV)",
       [](CLI::App*, Options& o) { o.samples = 100000; }, cmd_verify_decomposition},
      {"couple-soups", "coupled random walk and Brownian loop soups (JSON report)",
       [](CLI::App* s, Options& o) {
         o.radius = 1;
         s->add_option("--scale", o.scale, "scale N");
         s->add_option("--levels", o.levels, "dyadic levels per loop")->check(CLI::Range(1, 24));
         s->add_option("--max-half-length", o.max_half_length, "cutoff n_max (0: automatic)");
       },
       cmd_couple_soups},
      {"couple-bridge", "coupled walk and Brownian bridges, sup distances (CSV)",
       [](CLI::App* s, Options& o) {
         o.dim = 1;
         o.samples = 100;
         s->add_option("--length", o.length, "bridge length m (even)");
         s->add_option("--levels", o.levels, "dyadic levels")->check(CLI::Range(1, 24));
       },
       cmd_couple_bridge},
      {"estimate-beta", "growth exponent from mean LERW lengths (CSV)",
       [](CLI::App* s, Options& o) {
         o.samples = 200;
         s->add_option("--radii", o.radii, "increasing radii")->delimiter(',');
       },
       cmd_estimate_beta},
      {"estimate-escape", "escape probabilities Es(m, n) (CSV)",
       [](CLI::App* s, Options& o) {
         o.radius = 64;
         o.samples = 200;
         s->add_option("--m", o.ms, "inner radii m")->delimiter(',');
         s->add_option("--K", o.truncation, "truncation factor K")->check(CLI::PositiveNumber);
       },
       cmd_estimate_escape},
      {"scan-quasiloops", "quasi-loop probabilities, or quasi-loop centers of given paths (CSV)",
       [](CLI::App* s, Options& o) {
         o.radius = 256;
         o.samples = 100;
         s->add_option("--epsilons", o.epsilons, "eps values (default: --epsilon)")->delimiter(',');
         s->add_option("--M", o.power, "exponent M")->check(CLI::PositiveNumber);
         s->add_option("--in", o.in, "JSONL paths to scan instead of sampling");
         s->add_option("--s", o.inner_radius, "inner radius s (with --in)");
         s->add_option("--r", o.outer_radius, "outer radius r (with --in)");
       },
       cmd_scan_quasiloops},
      {"hittability", "fraction of LERW samples with a poorly hittable nearby point (CSV)",
       [](CLI::App* s, Options& o) {
         o.radius = 64;
         o.samples = 20;
         s->add_option("--inner", o.inner_samples, "walks per tested point")->check(CLI::PositiveNumber);
         s->add_option("--spacing", o.spacing, "grid spacing (0: ceil(eps^2 n))");
       },
       cmd_hittability},
      {"box-dimension", "box-counting dimension of rescaled LERW samples or given paths (CSV)",
       [](CLI::App* s, Options& o) {
         o.radius = 128;
         o.samples = 10;
         s->add_option("--in", o.in, "JSONL paths (rescaled by 1/radius)");
         s->add_option("--scales", o.scales, "box sides")->delimiter(',');
       },
       cmd_box_dimension},
      {"cut-points", "cut points of stopped walks and their containment in the loop erasure (CSV)",
       [](CLI::App*, Options& o) { o.radius = 64; o.samples = 1000; }, cmd_cut_points},
      {"lclt-check", "return probabilities against the local CLT expansion (CSV)",
       [](CLI::App* s, Options& o) {
         s->add_option("--max-n", o.max_n, "largest half-length")->check(CLI::Range(1, 1000000));
       },
       cmd_lclt_check},
  };
}

std::string option_value(const CLI::Option* opt) {
  if (opt->count() == 0) return opt->get_default_str();
  std::string joined;
  for (const auto& r : opt->results()) {
    if (!joined.empty()) joined += ',';
    joined += r;
  }
  return joined;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"loopforge: loop-erased walks, loop soups and their couplings"};
  app.name(args.empty() ? "loopforge" : args.front());
  app.require_subcommand(1);
  const auto table = commands();
  std::vector<Options> options(table.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto* sub = app.add_subcommand(table[i].name, table[i].help);
    sub->option_defaults()->always_capture_default();
    table[i].extras(sub, options[i]);
    add_common(sub, options[i]);
    subs.push_back(sub);
  }

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = std::find_if(subs.begin(), subs.end(), [](CLI::App* s) { return s->parsed(); });
    out << (parsed != subs.end() ? (*parsed)->help() : app.help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  std::size_t chosen = 0;
  while (!subs[chosen]->parsed()) ++chosen;
  Options& o = options[chosen];
  if (o.threads <= 0) o.threads = default_threads();
  const Executor exec(o.threads);

  ExperimentManifest manifest;
  manifest.command = table[chosen].name;
  for (const auto* opt : subs[chosen]->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "threads") continue;
    manifest.flags[name] = option_value(opt);
  }
  manifest.seed = o.seed;
  manifest.threads = o.threads;
  manifest.build_id = build_id();
  manifest.started = utc_timestamp();

  try {
    if (o.out.empty()) {
      table[chosen].runner(o, exec, out);
    } else {
      std::ostringstream buffer;
      table[chosen].runner(o, exec, buffer);
      std::ofstream f(o.out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + o.out);
      f << buffer.str();
      manifest.finished = utc_timestamp();
      write_manifest(manifest, o.out);
    }
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace loopforge
