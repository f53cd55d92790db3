#include "poscorr/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "poscorr/config.hpp"
#include "poscorr/detect.hpp"
#include "poscorr/serialize.hpp"
#include "poscorr/sources.hpp"
#include "poscorr/spectra.hpp"
#include "poscorr/tomo.hpp"

#ifndef POSCORR_VERSION
#define POSCORR_VERSION "0.0.0"
#endif

namespace poscorr {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::string preset;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool extrema = false;
};

struct Context {
  std::string subcommand;
  std::optional<SourceConfig> config;
  std::vector<std::string> files;
};

SourceConfig resolve_config(const Common& c) {
  if (!c.config_path.empty()) return load_config(c.config_path);
  if (!c.preset.empty()) return load_preset(c.preset);
  throw ConfigError("", "one of --config or --preset is required");
}

void write_file(Context& ctx, const Common& c, const std::string& name, const std::string& body) {
  fs::create_directories(c.out_dir);
  std::ofstream out(fs::path(c.out_dir) / name, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", (fs::path(c.out_dir) / name).string()));
  out << body;
  ctx.files.push_back(name);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(Context& ctx, const Common& c) {
  Json m;
  m["config_digest"] = ctx.config ? config_digest(*ctx.config) : std::string();
  m["seed"] = c.seed;
  m["subcommand"] = ctx.subcommand;
  m["version"] = POSCORR_VERSION;
  m["timestamp"] = utc_timestamp();
  m["files"] = ctx.files;
  fs::create_directories(c.out_dir);
  std::ofstream out(fs::path(c.out_dir) / "manifest.json", std::ios::binary | std::ios::trunc);
  out << dump_json(m);
}

void write_error(const Common& c, const std::string& subcommand, std::string_view kind, const std::string& message,
                 const std::string& field) {
  Json e;
  e["subcommand"] = subcommand;
  e["type"] = kind;
  e["message"] = message;
  if (!field.empty()) e["field"] = field;
  try {
    fs::create_directories(c.out_dir);
    std::ofstream out(fs::path(c.out_dir) / "error.json", std::ios::binary | std::ios::trunc);
    out << dump_json(Json{{"error", e}});
  } catch (const std::exception&) {
    // The error is still reported on stderr.
  }
}

VisibilityMethod method_of(const Common& c) { return c.extrema ? VisibilityMethod::extrema : VisibilityMethod::fit; }

Json state_json(const SourceOutput& out, const SourceConfig& config, VisibilityMethod method) {
  Json j;
  j["source"] = to_string(config.source);
  j["target"] = to_string(config.target);
  j["rho"] = to_json(out.rho);
  j["fidelity"] = fidelity(out.rho, bell_state<double>(config.target));
  j["purity"] = purity(out.rho);
  j["concurrence"] = concurrence(out.rho);
  j["average_visibility"] = average_visibility(out.rho, 10.0, method);
  j["expected_pair_rate"] = out.expected_pair_rate;
  j["expected_singles"] = {out.expected_singles[0], out.expected_singles[1]};
  j["diagnostics"] = out.diagnostics;
  return j;
}

// ---- subcommands ----

void cmd_simulate(Context& ctx, const Common& c) {
  const SourceConfig config = resolve_config(c);
  ctx.config = config;
  write_file(ctx, c, "state.json", dump_json(state_json(run_source(config), config, method_of(c))));
}

struct CorrelateOptions {
  double step_deg = 10.0;
  double integration_s = 1.0;
};

void cmd_correlate(Context& ctx, const Common& c, const CorrelateOptions& o) {
  const SourceConfig config = resolve_config(c);
  ctx.config = config;
  const SourceOutput out = run_source(config);
  const RateModel rates = RateModel::from(out, config.detection);
  const auto angles = analyzer_angles(o.step_deg);

  struct Fringe {
    AnalysisBasis basis;
    double signal_deg;
  };
  const Fringe fringes[] = {{AnalysisBasis::HV, 0.0},
                            {AnalysisBasis::HV, 90.0},
                            {AnalysisBasis::DA, 45.0},
                            {AnalysisBasis::DA, 135.0}};

  std::vector<AnalyzerSetting> settings;
  for (const auto& f : fringes)
    for (double a : angles) settings.push_back(AnalyzerSetting::linear(f.signal_deg, a, f.basis));
  const auto records = simulate_counts(out.rho, settings, rates, o.integration_s, c.seed);

  std::string csv = "basis,signal_angle_deg,idler_angle_deg,probability,coincidences,singles_s,singles_i\n";
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const auto& s = settings[k];
    const auto& r = records[k];
    csv += fmt::format("{},{},{},{},{},{},{}\n", to_string(*s.basis), format_number(s.signal.angle_deg),
                       format_number(s.idler.angle_deg),
                       format_number(coincidence_probability(out.rho, s, rates.extinction)),
                       format_number(r.coincidences), format_number(r.singles_s), format_number(r.singles_i));
  }
  write_file(ctx, c, "correlate.csv", csv);

  const VisibilityMethod method = method_of(c);
  Json summary;
  summary["visibility_hv"] = visibility(correlation_scan(out.rho, 0.0, angles, rates.extinction), method);
  summary["visibility_da"] = visibility(correlation_scan(out.rho, 45.0, angles, rates.extinction), method);
  summary["average_visibility"] = 0.5 * (summary["visibility_hv"].get<double>() + summary["visibility_da"].get<double>());
  summary["method"] = c.extrema ? "extrema" : "fit";
  write_file(ctx, c, "correlate_summary.json", dump_json(summary));
}

struct TomographyOptions {
  std::string input;
  std::string target;
  double pairs = 1e6;
  int settings = 36;
};

void cmd_tomography(Context& ctx, const Common& c, const TomographyOptions& o) {
  std::vector<CountRecord> records;
  Bell target = Bell::phi_plus;
  if (!c.config_path.empty() || !c.preset.empty()) {
    ctx.config = resolve_config(c);
    target = ctx.config->target;
  }
  if (!o.target.empty()) target = parse_bell(o.target);

  if (!o.input.empty()) {
    records = read_count_csv(o.input);
  } else {
    if (!ctx.config) throw ConfigError("", "simulated tomography needs --config or --preset (or pass --input)");
    if (!(o.pairs > 0.0)) throw std::invalid_argument("--pairs must be positive");
    const SourceOutput out = run_source(*ctx.config);
    const RateModel rates = RateModel::from(out, ctx.config->detection);
    const auto settings = standard_settings(o.settings).settings;
    double per_second = 0.0;
    for (const auto& r : expected_counts(out.rho, settings, rates, 1.0)) per_second += r.coincidences;
    if (!(per_second > 0.0)) throw std::domain_error("source produces no coincidences");
    records = simulate_counts(out.rho, settings, rates, o.pairs / per_second, c.seed);
    std::ostringstream csv;
    write_count_csv(csv, records);
    write_file(ctx, c, "counts.csv", csv.str());
  }
  const auto result = mle_reconstruct(records, bell_state<double>(target));
  if (!result.converged) spdlog::warn("MLE stopped after {} iterations without converging", result.iterations);
  write_file(ctx, c, "tomography.json", dump_json(to_json(tomography_report(result, target))));
}

struct PhaseScanOptions {
  double lp_from = 404.0;
  double lp_to = 406.0;
  int lp_steps = 5;
  double ls_span = 5.0;
  int ls_steps = 21;
};

std::vector<double> linspace(double from, double to, int steps) {
  if (steps < 1) throw std::invalid_argument("step count must be at least 1");
  if (steps == 1) return {from};
  std::vector<double> v(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) v[static_cast<std::size_t>(k)] = from + (to - from) * k / (steps - 1);
  return v;
}

void cmd_phase_scan(Context& ctx, const Common& c, const PhaseScanOptions& o) {
  const SourceConfig config = resolve_config(c);
  ctx.config = config;
  const CrystalSpec crystal = MaterialDatabase::builtin().crystal(config.combiner.material, config.combiner.length_mm,
                                                                  config.combiner.cut_angle_deg);
  const double reference =
      birefringent_pair_phase(crystal, make_mode(config.lambda_p_nm, config.spectrum.center_s_nm));
  std::string csv = "lambda_p_nm,lambda_s_nm,phase_rad\n";
  for (double lp : linspace(o.lp_from, o.lp_to, o.lp_steps)) {
    for (double ls : linspace(config.spectrum.center_s_nm - o.ls_span, config.spectrum.center_s_nm + o.ls_span,
                              o.ls_steps)) {
      const double phase = birefringent_pair_phase(crystal, make_mode(lp, ls)) - reference;
      csv += fmt::format("{},{},{}\n", format_number(lp), format_number(ls), format_number(wrap_phase(phase)));
    }
  }
  write_file(ctx, c, "phase_scan.csv", csv);
}

struct DeltaLOptions {
  double from = 0.0;
  double to = 100.0;
  int steps = 21;
};

void cmd_delta_l_scan(Context& ctx, const Common& c, const DeltaLOptions& o) {
  const SourceConfig config = resolve_config(c);
  ctx.config = config;
  const auto values = linspace(o.from, o.to, o.steps);
  const auto results = scan("delta_l_um", values, config, config.source);
  const VisibilityMethod method = method_of(c);
  std::string csv = "delta_l_um,visibility,fidelity\n";
  for (const auto& [dl, out] : results) {
    const auto it = out.diagnostics.find("visibility");
    const double v = it != out.diagnostics.end() ? it->second : average_visibility(out.rho, 10.0, method);
    csv += fmt::format("{},{},{}\n", format_number(dl), format_number(v),
                       format_number(fidelity(out.rho, bell_state<double>(config.target))));
  }
  write_file(ctx, c, "delta_l_scan.csv", csv);
}

struct RatesOptions {
  double integration_s = 1.0;
};

void cmd_rates(Context& ctx, const Common& c, const RatesOptions& o) {
  const SourceConfig config = resolve_config(c);
  ctx.config = config;
  const SourceOutput out = run_source(config);
  const RateModel rates = RateModel::from(out, config.detection);
  const auto expected = klyshko_ratios(out.expected_pair_rate, out.expected_singles[0], out.expected_singles[1]);
  const AnalyzerSetting open = AnalyzerSetting::open();
  const auto records = simulate_counts(out.rho, std::span(&open, 1), rates, o.integration_s, c.seed);
  const auto measured = klyshko_ratios(records);

  Json j;
  j["source"] = to_string(config.source);
  j["pump_power_mW"] = config.pump_power_mW;
  j["expected_pair_rate"] = out.expected_pair_rate;
  j["expected_singles"] = {{"signal", out.expected_singles[0]}, {"idler", out.expected_singles[1]}};
  j["detected_pair_rate_per_mW"] = out.diagnostics.at("detected_pair_rate_per_mW");
  j["klyshko_expected"] = {{"signal", expected.signal}, {"idler", expected.idler}};
  j["klyshko_simulated"] = {{"signal", measured.signal},
                            {"idler", measured.idler},
                            {"signal_sigma", measured.signal_sigma},
                            {"idler_sigma", measured.idler_sigma},
                            {"integration_s", o.integration_s}};
  Json chain;
  for (const char* key : {"generated_pair_rate", "bin_kept", "combiner_transmission", "coupling_pair_efficiency",
                          "coupling_single_efficiency_s", "coupling_single_efficiency_i", "eta_detector_s",
                          "eta_detector_i", "loss_product"}) {
    chain[key] = out.diagnostics.at(key);
  }
  j["loss_chain"] = chain;
  write_file(ctx, c, "rates.json", dump_json(j));
}

void add_common(CLI::App* sub, Common& c, bool with_extrema) {
  auto* cfg = sub->add_option("--config", c.config_path, "INI config file");
  auto* pre = sub->add_option("--preset", c.preset, "Shipped preset name");
  cfg->excludes(pre);
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
  if (with_extrema) sub->add_flag("--extrema", c.extrema, "Raw-extrema visibility instead of the sinusoid fit");
}

}  // namespace

std::string version_string() { return POSCORR_VERSION; }

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Position-correlation entangled photon-pair source simulator", "poscorr"};
  app.set_version_flag("--version", std::string(POSCORR_VERSION));
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  Common common;
  CorrelateOptions correlate;
  TomographyOptions tomo;
  PhaseScanOptions phase;
  DeltaLOptions delta;
  RatesOptions rates;

  auto* simulate = app.add_subcommand("simulate", "Density matrix and metrics of the configured source");
  add_common(simulate, common, true);

  auto* corr = app.add_subcommand("correlate", "HV and DA polarization correlation fringes");
  add_common(corr, common, true);
  corr->add_option("--step", correlate.step_deg, "Idler angle step in degrees")->capture_default_str();
  corr->add_option("--integration", correlate.integration_s, "Seconds per setting")->capture_default_str();

  auto* tomography = app.add_subcommand("tomography", "Maximum-likelihood state reconstruction");
  add_common(tomography, common, false);
  tomography->add_option("--input", tomo.input, "Count CSV; simulated from the config when absent");
  tomography->add_option("--target", tomo.target, "phi+|phi-|psi+|psi-");
  tomography->add_option("--pairs", tomo.pairs, "Expected coincidences summed over all settings")
      ->capture_default_str();
  tomography->add_option("--settings", tomo.settings, "16 or 36")->capture_default_str();

  auto* phase_scan = app.add_subcommand("phase-scan", "Combiner HH/VV phase relative to the centre wavelength");
  add_common(phase_scan, common, false);
  phase_scan->add_option("--lp-from", phase.lp_from, "First pump wavelength (nm)")->capture_default_str();
  phase_scan->add_option("--lp-to", phase.lp_to, "Last pump wavelength (nm)")->capture_default_str();
  phase_scan->add_option("--lp-steps", phase.lp_steps, "Pump wavelength count")->capture_default_str();
  phase_scan->add_option("--ls-span", phase.ls_span, "Signal half-range about the centre (nm)")->capture_default_str();
  phase_scan->add_option("--ls-steps", phase.ls_steps, "Signal wavelength count")->capture_default_str();

  auto* dl_scan = app.add_subcommand("delta-l-scan", "Visibility and fidelity against path difference");
  add_common(dl_scan, common, true);
  dl_scan->add_option("--from", delta.from, "First delta L (um)")->capture_default_str();
  dl_scan->add_option("--to", delta.to, "Last delta L (um)")->capture_default_str();
  dl_scan->add_option("--steps", delta.steps, "Point count")->capture_default_str();

  auto* rates_cmd = app.add_subcommand("rates", "Expected rates, loss chain and Klyshko ratios");
  add_common(rates_cmd, common, false);
  rates_cmd->add_option("--integration", rates.integration_s, "Seconds of open-port counting")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  Context ctx;
  ctx.subcommand = app.get_subcommands().front()->get_name();
  try {
    if (ctx.subcommand == "simulate") cmd_simulate(ctx, common);
    else if (ctx.subcommand == "correlate") cmd_correlate(ctx, common, correlate);
    else if (ctx.subcommand == "tomography") cmd_tomography(ctx, common, tomo);
    else if (ctx.subcommand == "phase-scan") cmd_phase_scan(ctx, common, phase);
    else if (ctx.subcommand == "delta-l-scan") cmd_delta_l_scan(ctx, common, delta);
    else if (ctx.subcommand == "rates") cmd_rates(ctx, common, rates);
    write_manifest(ctx, common);
  } catch (const ConfigError& e) {
    std::cerr << "poscorr " << ctx.subcommand << ": " << e.what() << "\n";
    write_error(common, ctx.subcommand, "config", e.what(), e.field());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "poscorr " << ctx.subcommand << ": " << e.what() << "\n";
    write_error(common, ctx.subcommand, "runtime", e.what(), "");
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args);
}

}  // namespace poscorr
