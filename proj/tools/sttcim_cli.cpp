// Command-line front end. Every subcommand writes its results to files
// under --out (default: current directory) and exits nonzero when a gate
// fails.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sttcim/sttcim.hpp"

namespace fs = std::filesystem;
using namespace sttcim;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

struct Settings {
  device::DeviceParams device;
  device::VariationSpec variation;
  harness::ExperimentOptions experiment;
};

Settings load_settings(const Globals& g) {
  Settings s;
  if (g.config_path.empty()) return s;
  const KeyValueConfig cfg = KeyValueConfig::load(g.config_path);
  device::apply_config(cfg, s.device, s.variation);
  energy::apply_config(cfg, s.experiment.energy);
  apply_config(cfg, s.experiment.array);
  cfg.get("fault_probability", s.experiment.fault_probability);
  cfg.get("replicate_as_special_write", s.experiment.replicate_as_special_write);
  cfg.require_all_used();
  return s;
}

fs::path output_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
  std::cout << "wrote " << path.string() << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void emit_reports(const Globals& g, const std::string& stem, const std::string& format,
                  const std::vector<harness::Report>& reports) {
  if (format == "csv" || format == "both") {
    std::ostringstream csv, breakdown;
    harness::emit_csv(csv, reports);
    harness::emit_breakdown_csv(breakdown, reports);
    write_file(output_path(g, stem + ".csv"), csv.str());
    write_file(output_path(g, stem + "_energy.csv"), breakdown.str());
  }
  if (format == "json" || format == "both") {
    std::ostringstream js;
    harness::emit_json(js, reports);
    write_file(output_path(g, stem + ".json"), js.str());
  }
}

std::uint32_t size_or_default(const std::string& kernel, std::uint32_t size) {
  return size ? size : harness::kernel_info(kernel).default_size;
}

// ---- bench ------------------------------------------------------------------

struct BenchOpts {
  std::string kernel = "vecsum";
  std::string mode = "cim";
  std::uint32_t size = 0;
  int latency = 1;
  std::vector<int> latencies{harness::default_latencies()};
  double fault_p = -1;
  std::string format = "both";
};

harness::ExperimentOptions experiment_options(const Settings& s, const BenchOpts& b) {
  harness::ExperimentOptions opt = s.experiment;
  if (b.fault_p >= 0) opt.fault_probability = b.fault_p;
  if (opt.fault_probability < 0 || opt.fault_probability > 1) throw ConfigError("fault probability must be in [0, 1]");
  return opt;
}

int bench_run(const Globals& g, const BenchOpts& b) {
  const Settings s = load_settings(g);
  const auto mode = harness::parse_mode(b.mode);
  const auto size = size_or_default(b.kernel, b.size);
  const auto rep = harness::run_experiment(b.kernel, mode, size, b.latency, g.seed, experiment_options(s, b));
  std::cout << b.kernel << ' ' << b.mode << " N=" << size << " L=" << b.latency
            << " speedup=" << fmt("%.4f", rep.speedup) << " energy_ratio=" << fmt("%.4f", rep.energy_ratio)
            << " accesses base=" << rep.base.stats.accesses() << " run=" << rep.run.stats.accesses() << '\n';
  emit_reports(g, "bench_" + b.kernel + "_" + b.mode + "_L" + std::to_string(b.latency), b.format, {rep});
  return 0;
}

int bench_sweep(const Globals& g, const BenchOpts& b) {
  const Settings s = load_settings(g);
  const auto mode = harness::parse_mode(b.mode);
  const auto size = size_or_default(b.kernel, b.size);
  const auto reps = harness::sweep_latency(b.kernel, mode, size, b.latencies, g.seed, experiment_options(s, b));
  bool monotone = true;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    std::cout << "L=" << reps[i].memory_latency << " speedup=" << fmt("%.4f", reps[i].speedup)
              << " energy_ratio=" << fmt("%.4f", reps[i].energy_ratio) << '\n';
    if (i > 0 && reps[i].memory_latency > reps[i - 1].memory_latency && reps[i].speedup < reps[i - 1].speedup) {
      monotone = false;
    }
  }
  emit_reports(g, "sweep_" + b.kernel + "_" + b.mode, b.format, reps);
  std::cout << (monotone ? "PASS" : "FAIL") << " speedup non-decreasing in memory latency\n";
  return monotone ? 0 : 1;
}

// ---- device -----------------------------------------------------------------

struct DeviceOpts {
  std::uint64_t samples = 100000;
  unsigned threads = 0;
  std::vector<double> grid{1.0};
  bool check = false;
};

int device_mc(const Globals& g, const DeviceOpts& d) {
  const Settings s = load_settings(g);
  unsigned threads = d.threads ? d.threads : std::max(1u, std::thread::hardware_concurrency());
  std::ostringstream csv;
  csv << "sigma_scale,samples,read_decision_rate,cim_decision_rate,disturb_reduced_fraction,"
         "mean_cim_cell_current_uA,mean_read_cell_current_uA,margin_low_uA,margin_high_uA\n";
  std::vector<device::FailureReport> reports;
  for (double scale : d.grid) {
    const auto r =
        device::monte_carlo_failures(s.device, s.variation.scaled(scale), d.samples, g.seed, threads);
    reports.push_back(r);
    char line[512];
    std::snprintf(line, sizeof line, "%.6g,%llu,%.9g,%.9g,%.9g,%.6f,%.6f,%.6f,%.6f\n", scale,
                  static_cast<unsigned long long>(r.samples), r.read_decision_rate, r.cim_decision_rate,
                  r.disturb_reduced_fraction, r.mean_cim_per_cell_current * 1e6, r.mean_read_cell_current * 1e6,
                  r.margin_low * 1e6, r.margin_high * 1e6);
    csv << line;
    std::cout << line;
  }
  write_file(output_path(g, "device_mc.csv"), csv.str());
  if (!d.check) return 0;

  std::vector<selftest::Check> checks;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const std::string at = " at sigma x" + fmt("%g", d.grid[i]);
    // The rate ratio is a property of the default calibration only; at
    // large sigmas both rates saturate towards each other.
    if (d.grid[i] == 1.0) {
      checks.push_back({"cim_decision_rate > 10 x read_decision_rate" + at,
                        r.cim_decision_rate > 10 * r.read_decision_rate,
                        fmt("%.3g", r.cim_decision_rate) + " vs " + fmt("%.3g", r.read_decision_rate)});
    }
    checks.push_back({"per-cell CiM current below read current in >= 99.9% of samples" + at,
                      r.disturb_reduced_fraction >= 0.999, fmt("%.6f", r.disturb_reduced_fraction)});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (d.grid[i] < d.grid[i - 1]) continue;
    monotone = monotone && reports[i].read_decision_rate >= reports[i - 1].read_decision_rate &&
               reports[i].cim_decision_rate >= reports[i - 1].cim_decision_rate;
  }
  checks.push_back({"decision rates weakly increase along the sigma grid", monotone, ""});
  selftest::print(std::cout, checks);
  return selftest::all_pass(checks) ? 0 : 1;
}

// ---- ecc / array ------------------------------------------------------------

int ecc_prove(const Globals& g, std::uint32_t trials) {
  std::ostringstream out;
  bool ok = true;
  for (auto kind : {ecc::CodeKind::Secded, ecc::CodeKind::Ec3ed4}) {
    const auto code = ecc::CodeSpec::make(kind, 32);
    out << ecc::to_string(kind) << " (n, k, t) = (" << code.code_bits() << ", " << code.data_bits() << ", "
        << code.correctable() << ")\n";
    const auto checks = selftest::code_suite(kind, g.seed, trials);
    selftest::print(out, checks);
    ok = ok && selftest::all_pass(checks);
  }
  std::cout << out.str();
  write_file(output_path(g, "ecc_prove.txt"), out.str());
  return ok ? 0 : 1;
}

int array_selftest(const Globals& g, bool dump) {
  const Settings s = load_settings(g);
  std::ostringstream out;
  const auto checks = selftest::array_suite(s.device, g.seed);
  out << "CiMType  RWL(ref,ap,p) RWR(ref,ap,p) SEL(0,1,2)\n";
  for (auto op : array::kAllOps) {
    const auto c = array::decode_controls(op);
    char line[96];
    std::snprintf(line, sizeof line, "%-8s %d%d%d           %d%d%d           %d%d%s\n", array::to_string(op), c.rwl[0],
                  c.rwl[1], c.rwl[2], c.rwr[0], c.rwr[1], c.rwr[2], c.sel[0], c.sel[1], c.sel2_dont_care ? "x" : c.sel[2] ? "1" : "0");
    out << line;
  }
  selftest::print(out, checks);
  std::cout << out.str();
  write_file(output_path(g, "array_selftest.txt"), out.str());
  if (dump) {
    // Small demonstration image: word i holds i * 0x9E3779B9 in its bank.
    ArrayConfig cfg = s.experiment.array;
    array::CimArray arr(cfg, array::MemoryKind::SttCim, s.experiment.energy);
    const Address words = std::min<Address>(arr.layout().capacity(), 64);
    for (Address a = 0; a < words; ++a) arr.write_word(a, static_cast<Word>(a * 0x9E3779B9u) & low_mask(cfg.word_width));
    std::ostringstream d;
    arr.dump(d);
    write_file(output_path(g, "array_dump.txt"), d.str());
  }
  return selftest::all_pass(checks) ? 0 : 1;
}

// ---- xform / map ------------------------------------------------------------

struct XformOpts {
  std::string in, plan, out, report;
};

int run_xform(const Globals& g, const XformOpts& x) {
  const cpu::Program prog = cpu::assemble(read_file(x.in));
  const mapper::MappingPlan plan = mapper::parse_plan(read_file(x.plan));
  const xform::Result res = xform::transform(prog, plan);
  fs::path out = x.out;
  if (out.is_relative() && !g.out_dir.empty() && g.out_dir != ".") out = output_path(g, x.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_file(out, cpu::disassemble(res.program));
  fs::path report = x.report.empty() ? fs::path(out.string() + ".report.csv") : fs::path(x.report);
  write_file(report, xform::format_report(res.report));
  std::cout << res.applied() << " rewrites applied, " << res.report.size() - res.applied() << " skipped; "
            << prog.code.size() << " -> " << res.program.code.size() << " instructions\n";
  return 0;
}

struct MapOpts {
  std::string pattern = "type1";
  std::uint32_t m = 8, n = 1024;
  std::string a = "A", b = "B";
};

int map_plan(const Globals& g, const MapOpts& o) {
  const Settings s = load_settings(g);
  const ArrayConfig& cfg = s.experiment.array;
  mapper::MappingPlan plan;
  if (o.pattern == "type1") plan = mapper::plan_type1(o.n, cfg, {}, o.a, o.b);
  else if (o.pattern == "type2") plan = mapper::plan_type2(o.m, o.n, cfg, {}, o.a, o.b);
  else if (o.pattern == "type3") plan = mapper::plan_type3(o.m, o.n, cfg, {}, o.a, o.b);
  else throw ConfigError("--pattern must be type1, type2 or type3");
  write_file(output_path(g, "plan_" + o.pattern + ".map"), mapper::to_text(plan));
  const auto problems = mapper::verify_plan(plan);
  for (const auto& p : problems) std::cout << "FAIL " << p << '\n';
  std::cout << mapper::to_string(plan.pattern) << ": " << plan.arrays.size() << " arrays, " << plan.overhead_writes
            << " overhead writes, " << (problems.empty() ? "PASS" : "FAIL") << " alignment\n";
  return problems.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STT-MRAM compute-in-memory simulator"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();

  BenchOpts b;
  auto* bench = app.add_subcommand("bench", "run benchmark kernels");
  bench->require_subcommand(1);
  auto add_bench_opts = [&](CLI::App* c) {
    c->add_option("--kernel", b.kernel, "xorcipher|vecsum|blit|strmatch|editdist|saxpy-add")->capture_default_str();
    c->add_option("--mode", b.mode, "base|cim|vec4|vec8")->capture_default_str();
    c->add_option("--size", b.size, "problem size (0 = kernel default)");
    c->add_option("--fault-p", b.fault_p, "per-access column failure probability");
    c->add_option("--format", b.format, "csv|json|both")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->capture_default_str();
  };
  auto* run = bench->add_subcommand("run", "one kernel, one mode, one latency");
  add_bench_opts(run);
  run->add_option("--mem-latency", b.latency, "memory latency in cycles")->capture_default_str();
  auto* sweep = bench->add_subcommand("sweep", "speedup across memory latencies");
  add_bench_opts(sweep);
  sweep->add_option("--latencies", b.latencies, "latencies to sweep")->delimiter(',');

  DeviceOpts d;
  auto* dev = app.add_subcommand("device", "device-level analysis");
  dev->require_subcommand(1);
  auto* mc = dev->add_subcommand("mc", "Monte Carlo decision failure rates");
  mc->add_option("--samples", d.samples, "samples per grid point")->capture_default_str();
  mc->add_option("--threads", d.threads, "worker threads (0 = all cores; results do not depend on it)");
  mc->add_option("--grid", d.grid, "sigma scale factors")->delimiter(',');
  mc->add_flag("--check", d.check, "gate on the variation properties");

  std::uint32_t trials = 10000;
  auto* ecc_cmd = app.add_subcommand("ecc", "error-correcting codes");
  ecc_cmd->require_subcommand(1);
  auto* prove = ecc_cmd->add_subcommand("prove", "closure, correction and detection suites");
  prove->add_option("--trials", trials, "random trials at full length")->capture_default_str();

  bool dump = false;
  auto* arr = app.add_subcommand("array", "array-level checks");
  arr->require_subcommand(1);
  auto* self = arr->add_subcommand("selftest", "truth tables, control decode and ADD oracle");
  self->add_flag("--dump", dump, "also write a hex dump of a sample array image");

  XformOpts x;
  auto* xf = app.add_subcommand("xform", "rewrite load/op sequences into CiM instructions");
  xf->add_option("--in", x.in, "input assembly")->required()->check(CLI::ExistingFile);
  xf->add_option("--plan", x.plan, "mapping plan")->required()->check(CLI::ExistingFile);
  xf->add_option("--out", x.out, "output assembly")->required();
  xf->add_option("--report", x.report, "rewrite report (default: <out>.report.csv)");

  MapOpts mo;
  auto* map = app.add_subcommand("map", "data mapping");
  map->require_subcommand(1);
  auto* plan = map->add_subcommand("plan", "emit a mapping plan");
  plan->add_option("--pattern", mo.pattern, "type1|type2|type3")->capture_default_str();
  plan->add_option("--m", mo.m, "length of the first operand (type2/type3)")->capture_default_str();
  plan->add_option("--n", mo.n, "length of the second operand")->capture_default_str();
  plan->add_option("--lhs", mo.a, "name of the first operand")->capture_default_str();
  plan->add_option("--rhs", mo.b, "name of the second operand")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return bench_run(g, b);
    if (*sweep) return bench_sweep(g, b);
    if (*mc) return device_mc(g, d);
    if (*prove) return ecc_prove(g, trials);
    if (*self) return array_selftest(g, dump);
    if (*xf) return run_xform(g, x);
    if (*plan) return map_plan(g, mo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
