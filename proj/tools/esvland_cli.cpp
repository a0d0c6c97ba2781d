#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "esvland/esvland.hpp"

namespace fs = std::filesystem;
using namespace esvland;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kError = 1, kUsage = 2, kRejected = 3, kReplayFail = 4, kHashRefused = 5 };

std::string default_out_dir() {
  const char* env = std::getenv("ESVLAND_OUT_DIR");
  return env && *env ? env : "esvland-out";
}

// Writes next to the target and renames, so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest(const std::string& command) {
  return {{"tool", "esvland"}, {"version", kVersion}, {"command", command}, {"created_utc", utc_now()}};
}

void write_manifest(const fs::path& dir, const json& m) { write_atomic(dir / "manifest.json", m.dump(2) + "\n"); }

std::string composition_text(const Composition& c) {
  std::string out;
  for (int k = 0; k < kNumClasses; ++k) {
    if (c[static_cast<std::size_t>(k)] == 0.0) continue;
    if (!out.empty()) out += ',';
    out += std::string(class_name(static_cast<LandClass>(k))) + "=" + format_real(c[static_cast<std::size_t>(k)]);
  }
  return out;
}

// Preset defaults, optionally replaced by a config file, then individual overrides.
struct ConfigArgs {
  std::string preset = "headline";
  std::string config_file;
  int t_max = -1;

  RunConfig resolve() const {
    RunConfig c;
    if (!config_file.empty()) c = load_config(config_file);
    else c.scenario = make_preset(parse_preset(preset));
    if (t_max >= 0) c.episode.t_max = t_max;
    c.episode.validate();
    return c;
  }
};

void add_config_flags(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("--preset", a.preset, "scenario preset")
      ->capture_default_str()
      ->check(CLI::IsMember({"eco-only", "spatial-no-regen", "headline"}));
  cmd->add_option("--config", a.config_file, "run config file (as written by `run` or `presets --show`)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--t-max", a.t_max, "episode step limit");
}

struct PlannerArgs {
  std::string kind = "greedy";
  std::uint64_t seed = 0;
  int beam_width = 4;
  int beam_horizon = 2;
  std::string tie_break = "lowest";

  PlannerSpec spec() const {
    PlannerSpec s;
    s.kind = parse_planner(kind);
    s.seed = seed;
    if (s.kind == PlannerKind::Beam) {
      s.beam_width = beam_width;
      s.beam_horizon = beam_horizon;
    }
    if (tie_break == "lowest") s.tie_break = TieBreak::LowestIndex;
    else if (tie_break == "random") s.tie_break = TieBreak::RandomAmongTies;
    else throw Error("unknown tie break '" + tie_break + "' (lowest | random)");
    s.validate();
    return s;
  }
};

InitFilters parse_filters(const std::string& s) {
  if (s == "training") return InitFilters::training();
  if (s == "effective") return InitFilters::effective();
  if (s == "none") return InitFilters::none();
  throw Error("unknown filter set '" + s + "' (training | effective | none)");
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  int m = 50;
  std::uint64_t seed = 0;
  std::string composition;
  int cell_side = 5;
  int patch_size = 10;
  bool patches = false;
  SplitSpec split;
};

int cmd_generate(const GenerateArgs& a, const fs::path& out) {
  const Composition comp = a.composition.empty() ? default_composition() : parse_composition(a.composition);
  const GridState region = synth_region(a.m, comp, a.seed, a.cell_side);
  write_atomic(out / "region.grid", grid_to_string(region));

  json m = manifest("generate");
  m["seed"] = a.seed;
  m["m"] = a.m;
  m["composition"] = composition_text(comp);
  m["realized_composition"] = composition_text(composition_of(region));
  m["grid_hash"] = grid_hash(region);
  m["files"] = {"region.grid"};

  if (a.patches) {
    SplitSpec spec = a.split;
    spec.seed = a.seed;
    const Dataset d = build_dataset(region, a.patch_size, spec);
    json samples = json::array();
    auto emit = [&](const std::vector<Sample>& side, const std::string& name) {
      for (const auto& s : side) {
        char file[64];
        std::snprintf(file, sizeof file, "patches/%s_p%02d_r%d.grid", name.c_str(), s.patch_index, s.data.round);
        write_atomic(out / file, grid_to_string(s.data.patch));
        samples.push_back({{"file", file},
                           {"side", name},
                           {"patch", s.patch_index},
                           {"round", s.data.round},
                           {"shift", {s.data.shift_row, s.data.shift_col}},
                           {"origin", {s.data.origin.row, s.data.origin.col}},
                           {"grid_hash", grid_hash(s.data.patch)}});
      }
    };
    emit(d.train, "train");
    emit(d.test, "test");
    m["dataset"] = {{"patch_size", a.patch_size}, {"patches", d.origins.size()},  {"train", d.split.train},
                    {"test", d.split.test},       {"n_aug", spec.n_aug},          {"shift_range", spec.shift_range},
                    {"samples", samples}};
  }
  write_manifest(out, m);
  std::cout << "wrote " << (out / "region.grid").string() << " (" << a.m << "x" << a.m << ", hash " << grid_hash(region)
            << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string grid;
  std::string filters = "training";
  ConfigArgs config;
  PlannerArgs planner;
};

int cmd_run(const RunArgs& a, const fs::path& out) {
  const GridState g = load_grid(a.grid);
  const RunConfig cfg = a.config.resolve();
  const PlannerSpec spec = a.planner.spec();
  const RunOutcome res = run_episode(g, spec, cfg, parse_filters(a.filters));
  if (const auto* rej = std::get_if<Rejection>(&res)) {
    std::cerr << rej->message() << "\n";
    return kRejected;
  }
  const auto& rec = std::get<EpisodeRecord>(res);
  std::ostringstream log;
  write_action_log(log, rec);
  write_atomic(out / "actions.log", log.str());
  write_atomic(out / "config.kv", config_to_string(cfg));
  write_atomic(out / "final.grid", grid_to_string(rec.final_state));
  write_atomic(out / "record.json", record_json(rec, fs::path(a.grid).filename().string()).dump(2) + "\n");

  const auto d = decompose(rec, cfg.scenario.reward);
  json m = manifest("run");
  m["grid_file"] = a.grid;
  m["grid_hash"] = rec.grid_hash;
  m["config_hash"] = rec.config_hash;
  m["preset"] = preset_name(cfg.scenario.reward.preset);
  m["planner"] = spec.label();
  m["seed"] = spec.seed;
  m["files"] = {"actions.log", "config.kv", "final.grid", "record.json"};
  m["delta"] = breakdown_json(d.delta);
  write_manifest(out, m);

  std::cout << spec.label() << " " << preset_name(cfg.scenario.reward.preset) << ": V0 " << format_real(rec.initial.v_total)
            << " -> " << format_real(rec.final.v_total) << " (dV " << format_real(rec.delta_v()) << ") after "
            << rec.steps.size() << " steps, " << cause_name(rec.cause) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::vector<std::string> grids;
  std::string region;
  int patch_size = 10;
  std::uint64_t split_seed = 0;
  std::vector<std::string> planners{"random", "greedy"};
  std::uint64_t seed = 0;
  int beam_width = 4;
  int beam_horizon = 2;
  int jobs = 1;
  ConfigArgs config;
};

int cmd_compare(const CompareArgs& a, const fs::path& out) {
  std::vector<CompareInput> inputs;
  for (const auto& path : a.grids) inputs.push_back({fs::path(path).filename().string(), load_grid(path)});
  if (!a.region.empty()) {
    SplitSpec spec;
    spec.seed = a.split_seed;
    const Dataset d = build_dataset(load_grid(a.region), a.patch_size, spec);
    for (const auto& s : d.test) {
      inputs.push_back({"p" + std::to_string(s.patch_index) + "r" + std::to_string(s.data.round), s.data.patch});
    }
  }
  if (inputs.empty()) throw Error("no grids given (pass grid files or --region)");

  const RunConfig cfg = a.config.resolve();
  std::vector<PlannerSpec> methods;
  for (std::size_t k = 0; k < a.planners.size(); ++k) {
    PlannerArgs p;
    p.kind = a.planners[k];
    p.seed = a.seed;
    p.beam_width = a.beam_width;
    p.beam_horizon = a.beam_horizon;
    methods.push_back(p.spec());
  }
  const CompareResult res = compare(inputs, methods, cfg, a.jobs);

  std::ostringstream report, summary, dom;
  write_report_csv(report, res.report);
  write_summary_csv(summary, res.report);
  write_dominance_csv(dom, res.report);
  write_atomic(out / "report.csv", report.str());
  write_atomic(out / "summary.csv", summary.str());
  write_atomic(out / "dominance.csv", dom.str());
  write_atomic(out / "config.kv", config_to_string(cfg));

  json m = manifest("compare");
  m["config_hash"] = config_hash(cfg);
  m["preset"] = preset_name(cfg.scenario.reward.preset);
  m["seed"] = a.seed;
  m["methods"] = res.report.methods;
  json grids = json::array();
  for (const auto& in : inputs) grids.push_back({{"id", in.id}, {"grid_hash", grid_hash(in.grid)}});
  m["grids"] = grids;
  m["rejected"] = res.report.rejected;
  m["effective_grids"] = inputs.size() - res.report.rejected.size();
  m["reference"] = reference_json();
  m["files"] = {"report.csv", "summary.csv", "dominance.csv", "config.kv"};
  write_manifest(out, m);

  if (res.report.empty()) {
    std::cout << "no effective grids: all " << inputs.size() << " grids have V0 <= " << cfg.episode.min_initial_value
              << "\n";
    return kOk;
  }
  for (const auto& s : res.report.summaries) {
    std::cout << s.method << ": " << s.episodes << " episodes, mean dV " << format_real(s.mean) << " +/- "
              << format_real(s.std) << ", success " << format_real(s.success_rate) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReplayArgs {
  std::string log;
  std::string grid;
  std::string config;
};

int cmd_replay(const ReplayArgs& a) {
  const ActionLog log = load_action_log(a.log);
  const GridState g = load_grid(a.grid);
  const std::string cfg_path = a.config.empty() ? (fs::path(a.log).parent_path() / "config.kv").string() : a.config;
  const RunConfig cfg = load_config(cfg_path);
  try {
    const ReplayVerdict v = replay(log, g, cfg);
    if (v.pass) {
      std::cout << "PASS " << log.steps.size() << " steps\n";
      return kOk;
    }
    std::cout << "FAIL at step " << v.failed_step.value_or(-1) << ": " << v.detail << "\n";
    return kReplayFail;
  } catch (const HashMismatch& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kHashRefused;
  }
}

int cmd_presets(const std::string& show) {
  if (!show.empty()) {
    RunConfig c;
    c.scenario = make_preset(parse_preset(show));
    std::cout << config_to_string(c);
    return kOk;
  }
  for (auto p : {Preset::EcoOnly, Preset::SpatialNoRegen, Preset::Headline}) {
    const auto s = make_preset(p);
    const auto& r = s.reward;
    std::cout << preset_name(p) << ": uplift " << format_real(s.regen_uplift) << ", w_tree " << format_real(r.w_tree)
              << ", w_crop " << format_real(r.w_crop) << ", w_built " << format_real(r.w_built) << ", w_water "
              << format_real(r.w_water.start) << "->" << format_real(r.w_water.end) << ", w_riparian "
              << format_real(r.w_riparian) << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Land-use allocation simulator and planning harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string out_dir = default_out_dir();
  app.add_option("--out", out_dir, "output directory (default: $ESVLAND_OUT_DIR or ./esvland-out)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "synthesize a region grid");
  g->add_option("--m", gen.m, "region size in cells")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "generator and split seed")->capture_default_str();
  g->add_option("--composition", gen.composition, "class shares, e.g. water=0.5,crops=0.5");
  g->add_option("--cell-side", gen.cell_side, "pixels per cell side")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_flag("--patches", gen.patches, "also write split and augmented patches");
  g->add_option("--patch-size", gen.patch_size, "patch size in cells")->capture_default_str();
  g->add_option("--n-aug", gen.split.n_aug, "augmentation rounds per patch")->capture_default_str();

  RunArgs run;
  auto* r = app.add_subcommand("run", "run one planner episode on a grid");
  r->add_option("--grid", run.grid, "grid file")->required()->check(CLI::ExistingFile);
  r->add_option("--planner", run.planner.kind)->capture_default_str()->check(CLI::IsMember({"random", "greedy", "beam"}));
  r->add_option("--seed", run.planner.seed, "planner seed")->capture_default_str();
  r->add_option("--beam-width", run.planner.beam_width)->capture_default_str();
  r->add_option("--beam-horizon", run.planner.beam_horizon)->capture_default_str();
  r->add_option("--tie-break", run.planner.tie_break)->capture_default_str()->check(CLI::IsMember({"lowest", "random"}));
  r->add_option("--filters", run.filters, "init filters")
      ->capture_default_str()
      ->check(CLI::IsMember({"training", "effective", "none"}));
  add_config_flags(r, run.config);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "compare planners on effective grids");
  c->add_option("grids", cmp.grids, "grid files");
  c->add_option("--region", cmp.region, "region grid; its augmented test samples are compared")
      ->check(CLI::ExistingFile);
  c->add_option("--patch-size", cmp.patch_size)->capture_default_str();
  c->add_option("--split-seed", cmp.split_seed, "dataset split seed for --region")->capture_default_str();
  c->add_option("--planners", cmp.planners, "methods to compare")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember({"random", "greedy", "beam"}));
  c->add_option("--seed", cmp.seed, "planner seed")->capture_default_str();
  c->add_option("--beam-width", cmp.beam_width)->capture_default_str();
  c->add_option("--beam-horizon", cmp.beam_horizon)->capture_default_str();
  c->add_option("--jobs", cmp.jobs, "parallel episodes")->capture_default_str()->check(CLI::PositiveNumber);
  add_config_flags(c, cmp.config);

  ReplayArgs rep;
  auto* rp = app.add_subcommand("replay", "re-execute an action log and verify it");
  rp->add_option("--log", rep.log, "actions.log")->required()->check(CLI::ExistingFile);
  rp->add_option("--grid", rep.grid, "grid file the log was recorded on")->required()->check(CLI::ExistingFile);
  rp->add_option("--config", rep.config, "config file (default: config.kv next to the log)");

  std::string show;
  auto* pr = app.add_subcommand("presets", "list scenario presets");
  pr->add_option("--show", show, "print a preset as a config file")
      ->check(CLI::IsMember({"eco-only", "spatial-no-regen", "headline"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen, out_dir);
    if (*r) return cmd_run(run, out_dir);
    if (*c) return cmd_compare(cmp, out_dir);
    if (*rp) return cmd_replay(rep);
    if (*pr) return cmd_presets(show);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kUsage;
}
