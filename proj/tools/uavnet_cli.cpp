// uavnet: run scheme x seed batches, emit figure data, lint scenario files.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 invalid scenario or arguments,
// 4 infeasible scenario, 5 internal error.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uavnet/io.hpp"
#include "uavnet/sim.hpp"

namespace fs = std::filesystem;
using namespace uavnet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kInvalid = 3, kInfeasible = 4, kInternal = 5 };

struct RunArgs {
  std::string scenario;
  std::string schemes;
  std::string seeds;
  std::string out;
  std::string power;
  std::string slots;
  unsigned threads = 0;
  bool quiet = false;
};

struct PlotArgs {
  std::string run;
  std::string out;
  std::string scheme;
  std::string seed;
};

fs::path out_root() {
  const char* e = std::getenv("UAVNET_OUT_ROOT");
  return e && *e ? fs::path(e) : fs::path();
}

// Relative paths land under UAVNET_OUT_ROOT when it is set.
fs::path resolve_out(const std::string& out, const std::string& scenario) {
  const fs::path root = out_root();
  if (out.empty()) {
    if (root.empty()) throw ValidationError("out", "--out is required when UAVNET_OUT_ROOT is unset");
    return root / fs::path(scenario).stem();
  }
  const fs::path p(out);
  return p.is_relative() && !root.empty() ? root / p : p;
}

int cmd_run(const RunArgs& a) {
  const ScenarioConfig base = load_scenario(a.scenario);
  std::vector<SchemeId> schemes;
  if (a.schemes.empty()) {
    schemes.assign(kAllSchemes.begin(), kAllSchemes.end());
  } else {
    std::string cur;
    for (char c : a.schemes + ",") {
      if (c != ',') {
        cur += c;
        continue;
      }
      if (cur.empty()) throw ValidationError("schemes", "empty scheme name in '" + a.schemes + "'");
      schemes.push_back(parse_scheme(cur));
      cur.clear();
    }
  }
  const std::vector<std::uint64_t> seeds =
      a.seeds.empty() ? std::vector<std::uint64_t>{base.rng_seed} : parse_seed_list(a.seeds);
  std::vector<std::optional<double>> powers{std::nullopt};
  if (!a.power.empty()) {
    powers.clear();
    for (double p : parse_real_list(a.power, "power-dbm")) powers.emplace_back(p);
  }
  std::vector<std::optional<int>> slots{std::nullopt};
  if (!a.slots.empty()) {
    slots.clear();
    for (int s : parse_int_list(a.slots, "service-slots")) {
      if (s < 1) throw ValidationError("service-slots", "must be >= 1");
      slots.emplace_back(s);
    }
  }
  const fs::path out = resolve_out(a.out, a.scenario);

  RunManifest man;
  man.scenario = a.scenario;
  for (SchemeId s : schemes) man.schemes.emplace_back(scheme_name(s));
  man.seeds = seeds;
  man.out_dir = out.string();
  man.timestamp = utc_timestamp();
  for (const auto& p : powers)
    if (p) man.power_dbm.push_back(*p);
  for (const auto& s : slots)
    if (s) man.service_slots.push_back(*s);
  write_text(out / "manifest.json", manifest_json(man));
  write_text(out / "scenario.cfg", serialize_scenario(base));

  std::vector<SummaryRow> rows;
  for (const auto& p : powers) {
    ScenarioConfig cfg = base;
    if (p) cfg.p_total_max = cfg.p_user_max = dbm_to_watts(*p);
    cfg.validate();
    for (const auto& s : slots) {
      RunOptions opts;
      if (s) opts.service_slots = *s;
      const auto runs = run_batch(cfg, schemes, seeds, opts, a.threads);
      for (const auto& run : runs) {
        ScenarioConfig c = cfg;
        c.rng_seed = run.seed;
        const CaseKey key{p, s, run.scheme, run.seed};
        write_case(out / case_dir(key), c, key, run);
        SummaryRow row{key, collect_metrics(c, run), {}, static_cast<int>(check_run(c, run).size())};
        for (const auto& r : run.rounds) row.round_sizes.push_back(static_cast<int>(r.users.size()));
        if (!a.quiet) std::printf("%s\n", summary_line(row).c_str());
        rows.push_back(std::move(row));
      }
    }
  }
  write_summary(out / "summary.csv", rows);
  int bad = 0;
  for (const auto& r : rows) bad += r.violations > 0;
  if (bad) {
    std::fprintf(stderr, "uavnet: %d case(s) failed the hard re-check; see metrics.json\n", bad);
    return kInternal;
  }
  if (!a.quiet) std::printf("wrote %zu case(s) to %s\n", rows.size(), out.string().c_str());
  return kOk;
}

int cmd_plotdata(const PlotArgs& a) {
  PlotdataOptions opts;
  if (!a.scheme.empty()) opts.scheme = parse_scheme(a.scheme);
  if (!a.seed.empty()) {
    const auto s = parse_seed_list(a.seed, "seed");
    if (s.size() != 1) throw ValidationError("seed", "expects one seed");
    opts.seed = s.front();
  }
  const fs::path run = a.run;
  const fs::path out = a.out.empty() ? run / "plotdata" : fs::path(a.out);
  for (const auto& f : write_plotdata(run, out, opts)) std::printf("%s\n", f.string().c_str());
  return kOk;
}

int cmd_validate(const std::vector<std::string>& files) {
  int code = kOk;
  for (const auto& f : files) {
    try {
      const ScenarioConfig cfg = load_scenario(f);
      std::printf("%s: ok (%d users, %d slots)\n", f.c_str(), cfg.n_users, cfg.horizon_slots());
    } catch (const IoError& e) {
      std::fprintf(stderr, "%s: %s\n", f.c_str(), e.what());
      if (code == kOk) code = kIo;
    } catch (const Error& e) {
      std::fprintf(stderr, "%s: %s\n", f.c_str(), e.what());
      code = kInvalid;
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV trajectory, association and resource planning with user mobility prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "run every scheme x seed combination and write a results directory");
  run->add_option("--scenario", ra.scenario, "scenario file")->required();
  run->add_option("--schemes", ra.schemes, "comma list of schemes (default: all)");
  run->add_option("--seeds", ra.seeds, "seed list, e.g. 1..10 or 1,4,7 (default: scenario rng_seed)");
  run->add_option("--out", ra.out, "output directory (relative paths go under UAVNET_OUT_ROOT)");
  run->add_option("--power-dbm", ra.power, "transmit power sweep in dBm, e.g. 10,15,20");
  run->add_option("--service-slots", ra.slots, "serving-slot sweep, e.g. 1..8 (travel slots come on top)");
  run->add_option("--threads", ra.threads, "worker threads (0: hardware concurrency)");
  run->add_flag("--quiet", ra.quiet, "no per-case output");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plotdata", "write figure data series from a completed run directory");
  plot->add_option("--run", pa.run, "run directory")->required();
  plot->add_option("--out", pa.out, "output directory (default: <run>/plotdata)");
  plot->add_option("--scheme", pa.scheme, "case for convergence/trajectory/speed (default: first scheme)");
  plot->add_option("--seed", pa.seed, "case seed (default: first seed)");

  std::vector<std::string> files;
  auto* val = app.add_subcommand("validate", "check scenario files");
  val->add_option("files", files, "scenario files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(ra);
    if (*plot) return cmd_plotdata(pa);
    if (*val) return cmd_validate(files);
  } catch (const IoError& e) {
    std::fprintf(stderr, "uavnet: %s\n", e.what());
    return kIo;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "uavnet: infeasible: %s\n", e.what());
    return kInfeasible;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "uavnet: %s\n", e.what());
    return kInvalid;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "uavnet: invalid %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "uavnet: internal error: %s\n", e.what());
    return kInternal;
  }
  return kUsage;
}
