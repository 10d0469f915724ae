#include "stablehh/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "stablehh/errors.hpp"
#include "stablehh/identification.hpp"
#include "stablehh/ingest.hpp"
#include "stablehh/oracle.hpp"
#include "stablehh/serialization.hpp"
#include "stablehh/stability.hpp"

namespace stablehh::cli {

namespace {

struct ValidationFailure {
  std::vector<std::string> lines;
};

ModelKind model_of(const std::string& name, bool binding) { return ModelKind::make(parse_regime(name), binding); }

void validate(const std::vector<MarriageMarket>& markets) {
  ValidationFailure failure;
  for (const MarriageMarket& m : markets)
    for (const Violation& v : validate_market(m)) failure.lines.push_back(m.region + ": " + to_string(v));
  if (!failure.lines.empty()) throw failure;
}

std::vector<MarriageMarket> load_markets(const std::string& path) {
  auto markets = io::markets_from_json(io::read_file(path));
  if (markets.empty()) throw EmptyMarket("no markets in " + path);
  validate(markets);
  return markets;
}

// Markets run in parallel; results keep input order.
template <class T>
std::vector<T> for_each_market(std::size_t n, unsigned jobs, const std::function<T(std::size_t)>& task) {
  std::vector<T> out(n);
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = task(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, n); ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = task(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return std::string_view(buf) == "-0.0000" ? "0.0000" : buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

// --- subcommands -----------------------------------------------------------

struct IngestArgs {
  std::string agents, households, config, out;
};

int run_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  const ingest::Config config = a.config.empty() ? ingest::Config{} : ingest::load_config(a.config);
  const auto agents = ingest::read_agents_csv(std::filesystem::path(a.agents));
  const auto households = ingest::read_households_csv(std::filesystem::path(a.households));
  ingest::Result result = ingest::run(agents, households, config);
  for (const auto& [id, reason] : result.dropped) err << "dropped " << id << ": " << reason << '\n';
  for (const std::string& note : result.notes) err << "note: " << note << '\n';
  if (result.markets.empty()) throw EmptyMarket("no market with at least one couple");
  validate(result.markets);
  io::write_file(a.out, io::markets_to_json(result.markets));
  out << "wrote " << result.markets.size() << " market(s) to " << a.out << '\n';
  return kOk;
}

struct SynthArgs {
  std::uint64_t seed = 1;
  std::size_t couples = 10, singles = 0;
  std::string model = "jc";
  bool binding = false;
  std::string out, truth;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  const auto syn = oracle::generate_stable_market(a.seed, a.couples, a.singles, model_of(a.model, a.binding));
  io::write_file(a.out, io::markets_to_json(std::span(&syn.market, 1)));
  if (!a.truth.empty()) io::write_file(a.truth, io::truth_to_json(syn.truth));
  out << "wrote synthetic market (" << a.couples << " couples, " << a.singles << " singles) to " << a.out << '\n';
  return kOk;
}

struct StabilityArgs {
  std::string model = "jc";
  bool binding = false;
  std::string split = "fixed";
  std::string market, out, csv;
  unsigned jobs = 1;
};

int run_stability(const StabilityArgs& a, std::ostream& out) {
  const ModelKind model = model_of(a.model, a.binding);
  const SplitMode split = parse_split_mode(a.split);
  if (split == SplitMode::Pinned) throw InvalidInput("--split must be fixed or endogenous");
  const auto markets = load_markets(a.market);
  const auto reports = for_each_market<StabilityReport>(
      markets.size(), a.jobs, [&](std::size_t i) { return solve_stability_indices(markets[i], model, split); });
  io::write_file(a.out, io::reports_to_json(reports));
  if (!a.csv.empty()) {
    std::ostringstream csv;
    io::write_stability_csv(csv, reports);
    io::write_file(a.csv, csv.str());
  }
  for (const StabilityReport& r : reports)
    out << r.region << ": " << r.options.size() << " exit options, sum of indices " << fixed4(r.objective) << '\n';
  return kOk;
}

struct BoundsArgs {
  std::string model = "jc";
  bool binding = false;
  std::string market, report, out, json, plot;
  bool pin_nonlabor = false;
  std::string denominator = "full_income";
  unsigned jobs = 1;
};

int run_bounds(const BoundsArgs& a, std::ostream& out) {
  const ModelKind model = model_of(a.model, a.binding);
  // The report is read first so that a missing stage-1 artifact is reported
  // as such even when the market is also unusable.
  const auto reports = io::reports_from_json(io::read_file(a.report));
  const auto markets = load_markets(a.market);

  BoundsOptions options;
  options.pin_nonlabor = a.pin_nonlabor;
  if (a.denominator == "full_income") options.denominator = Denominator::FullIncome;
  else if (a.denominator == "expenditure") options.denominator = Denominator::Expenditure;
  else throw InvalidInput("--denominator must be full_income or expenditure");
  options.jobs = markets.size() > 1 ? 1 : a.jobs;

  std::vector<const StabilityReport*> matched;
  for (const MarriageMarket& m : markets) {
    const auto it = std::find_if(reports.begin(), reports.end(), [&](const StabilityReport& r) { return r.region == m.region; });
    if (it == reports.end()) throw InvalidInput("stability report has no entry for region " + m.region);
    if (!(it->model == model))
      throw ModelMismatch("stability report for " + m.region + " was computed under a different model");
    matched.push_back(&*it);
  }
  const auto bounds = for_each_market<BoundsReport>(markets.size(), markets.size() > 1 ? a.jobs : 1, [&](std::size_t i) {
    return compute_bounds(markets[i], *matched[i], options);
  });

  std::ostringstream csv;
  io::write_bounds_csv(csv, bounds);
  io::write_file(a.out, csv.str());
  if (!a.json.empty()) io::write_file(a.json, io::bounds_to_json(bounds));
  if (!a.plot.empty()) {
    std::ostringstream plot;
    io::write_plot_data(plot, bounds);
    io::write_file(a.plot, plot.str());
  }
  std::size_t couples = 0;
  for (const BoundsReport& b : bounds) couples += b.couples.size();
  out << "bounds for " << couples << " couple(s) written to " << a.out << '\n';
  return kOk;
}

struct ReportArgs {
  std::string stability, bounds, out;
};

void stability_table(std::ostream& os, const std::vector<StabilityReport>& reports) {
  std::vector<double> averages, minima;
  for (const StabilityReport& r : reports)
    for (const CoupleSummary& c : r.couples) {
      averages.push_back(c.average_index);
      minima.push_back(c.minimum_index);
    }
  os << "Stability indices";
  if (!reports.empty()) {
    os << " (model " << to_string(reports.front().model.regime())
       << (reports.front().model.binding() ? ", binding transfers" : "") << ", split "
       << to_string(reports.front().split) << ")";
  }
  os << "\n";
  os << "couples: " << averages.size() << "\n";
  if (averages.empty()) return;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto lowest = [](const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); };
  os << pad("", 10) << pad("average", 12) << pad("minimum", 12) << "\n";
  os << "mean      " << pad(fixed4(mean(averages)), 12) << pad(fixed4(mean(minima)), 12) << "\n";
  os << "min       " << pad(fixed4(lowest(averages)), 12) << pad(fixed4(lowest(minima)), 12) << "\n";
  const bool unique = std::all_of(reports.begin(), reports.end(), [](const StabilityReport& r) { return r.indices_unique; });
  if (!unique) os << "per-option indices come from one optimal vertex and may not be unique; their sum is\n";
}

void bounds_table(std::ostream& os, const std::vector<BoundsReport>& bounds) {
  struct Acc {
    double lower = 0, upper = 0, naive_lower = 0, naive_upper = 0;
  };
  Acc share, rule;
  std::size_t n = 0;
  for (const BoundsReport& b : bounds)
    for (const CoupleBounds& c : b.couples) {
      ++n;
      share.lower += c.private_share.lower;
      share.upper += c.private_share.upper;
      share.naive_lower += c.naive_private_share.lower;
      share.naive_upper += c.naive_private_share.upper;
      rule.lower += c.sharing_rule.lower;
      rule.upper += c.sharing_rule.upper;
      rule.naive_lower += c.naive_sharing_rule.lower;
      rule.naive_upper += c.naive_sharing_rule.upper;
    }
  os << "\nBounds (means over " << n << " couple(s), percent)\n";
  if (n == 0) return;
  const double k = 100.0 / static_cast<double>(n);
  os << pad("", 16) << pad("lower", 11) << pad("upper", 11) << pad("difference", 12) << pad("naive lower", 13)
     << pad("naive upper", 13) << pad("naive diff", 12) << "\n";
  auto line = [&](const char* label, const Acc& a) {
    std::string l(label);
    l.resize(16, ' ');
    os << l << pad(fixed4(a.lower * k), 11) << pad(fixed4(a.upper * k), 11) << pad(fixed4((a.upper - a.lower) * k), 12)
       << pad(fixed4(a.naive_lower * k), 13) << pad(fixed4(a.naive_upper * k), 13)
       << pad(fixed4((a.naive_upper - a.naive_lower) * k), 12) << "\n";
  };
  line("sharing rule", rule);
  line("private share", share);
  if (!bounds.empty()) {
    os << "sharing rule: her leisure, private good, Lindahl share of the public good and an attribution in [0, 1]\n"
          "of the children's goods, over household "
       << (bounds.front().denominator == Denominator::FullIncome ? "full income" : "expenditure")
       << "; this definition is configurable (--denominator)\n";
  }
}

int run_report(const ReportArgs& a, std::ostream& out) {
  const auto reports = io::reports_from_json(io::read_file(a.stability));
  std::ostringstream table;
  stability_table(table, reports);
  if (!a.bounds.empty()) bounds_table(table, io::bounds_from_json(io::read_file(a.bounds)));
  if (a.out.empty()) out << table.str();
  else io::write_file(a.out, table.str());
  return kOk;
}

}  // namespace

int run_pipeline(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability and sharing-rule bounds for collective households in marriage markets", "stablehh"};
  app.require_subcommand(1);

  IngestArgs ia;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build market JSON from agents/households CSV");
  ingest_cmd->add_option("--agents", ia.agents, "agents.csv")->required();
  ingest_cmd->add_option("--households", ia.households, "households.csv")->required();
  ingest_cmd->add_option("--config", ia.config, "ingest configuration (JSON)");
  ingest_cmd->add_option("--out", ia.out, "output market JSON")->required();

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic market that is stable by construction");
  synth_cmd->add_option("--seed", sa.seed)->required();
  synth_cmd->add_option("--couples", sa.couples)->required()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--singles", sa.singles);
  synth_cmd->add_option("--model", sa.model)->check(CLI::IsMember({"jc", "spc"}));
  synth_cmd->add_flag("--binding", sa.binding, "sole custody with binding minimal transfers");
  synth_cmd->add_option("--out", sa.out)->required();
  synth_cmd->add_option("--truth", sa.truth, "write the generating allocation here");

  StabilityArgs st;
  auto* stab_cmd = app.add_subcommand("stability", "Compute stability indices");
  stab_cmd->add_option("--model", st.model)->check(CLI::IsMember({"jc", "spc"}));
  stab_cmd->add_flag("--binding", st.binding);
  stab_cmd->add_option("--split", st.split)->check(CLI::IsMember({"fixed", "endogenous"}));
  stab_cmd->add_option("--market", st.market)->required();
  stab_cmd->add_option("--out", st.out)->required();
  stab_cmd->add_option("--csv", st.csv, "per-option indices as CSV");
  stab_cmd->add_option("--jobs", st.jobs)->check(CLI::PositiveNumber);

  BoundsArgs ba;
  auto* bounds_cmd = app.add_subcommand("bounds", "Bound private shares and sharing rules");
  bounds_cmd->add_option("--model", ba.model)->check(CLI::IsMember({"jc", "spc"}));
  bounds_cmd->add_flag("--binding", ba.binding);
  bounds_cmd->add_option("--market", ba.market)->required();
  bounds_cmd->add_option("--report", ba.report, "stability JSON from the stability subcommand")->required();
  bounds_cmd->add_option("--out", ba.out, "bounds CSV")->required();
  bounds_cmd->add_option("--json", ba.json, "bounds JSON");
  bounds_cmd->add_option("--emit-plot-data", ba.plot, "sharing rule vs wage ratio CSV");
  bounds_cmd->add_flag("--pin-nonlabor", ba.pin_nonlabor, "replay the stage-1 non-labor splits");
  bounds_cmd->add_option("--denominator", ba.denominator)->check(CLI::IsMember({"full_income", "expenditure"}));
  bounds_cmd->add_option("--jobs", ba.jobs)->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Summary tables");
  report_cmd->add_option("--stability", ra.stability)->required();
  report_cmd->add_option("--bounds", ra.bounds, "bounds JSON");
  report_cmd->add_option("--out", ra.out);

  std::vector<const char*> argv{"stablehh"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }

  try {
    if (*ingest_cmd) return run_ingest(ia, out, err);
    if (*synth_cmd) return run_synth(sa, out);
    if (*stab_cmd) return run_stability(st, out);
    if (*bounds_cmd) return run_bounds(ba, out);
    if (*report_cmd) return run_report(ra, out);
  } catch (const ValidationFailure& v) {
    err << "error: market validation failed\n";
    for (const std::string& line : v.lines) err << "  " << line << '\n';
    return kValidation;
  } catch (const MissingFile& e) {
    err << "error: " << e.what() << '\n';
    return kMissingFile;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ModelMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const InconsistentRegion& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const EmptyMarket& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const SolverFailure& e) {
    err << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const AdjustmentError& e) {
    err << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace stablehh::cli
