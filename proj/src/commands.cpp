#include "svtp/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "svtp/errors.hpp"
#include "svtp/fisher_check.hpp"

namespace svtp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void make_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << text;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

/// metrics.csv writer; every row is flushed so a failed run leaves a complete prefix.
class MetricsWriter {
 public:
  MetricsWriter(const fs::path& path, bool wall_time) : f_(path), wall_time_(wall_time) {
    if (!f_) throw InputError("cannot write '" + path.string() + "'");
    f_ << "iter,wall_time_s,neg_elbo,test_mse\n";
    f_.flush();
  }
  void operator()(const TrainRecord& r) {
    f_ << r.iter << ',' << (wall_time_ ? fmt(r.wall_time_s) : "") << ',' << fmt(r.neg_elbo) << ','
       << (r.test_mse ? fmt(*r.test_mse) : "") << '\n';
    f_.flush();
  }

 private:
  std::ofstream f_;
  bool wall_time_;
};

RunConfig resolved(RunConfig cfg, const PreparedData& data) {
  cfg.batch = data.batch;
  cfg.inducing = data.inducing;
  cfg.adam_lr = cfg.adam_config().step_size;
  return cfg;
}

json run_stats(const TrainResult& r) {
  json j;
  j["final_neg_elbo"] = nullable(r.final_neg_elbo);
  j["final_test_mse"] = nullable(r.final_test_mse);
  j["last_minibatch_neg_elbo"] = r.records.empty() ? json(nullptr) : json(r.records.back().neg_elbo);
  j["iterations"] = r.records.size();
  j["rejected_steps"] = r.rejected_steps;
  j["clamped_steps"] = r.clamped_steps;
  j["fisher_fallbacks"] = r.fisher_fallbacks;
  j["nu_tilde"] = r.state.q.nu_tilde;
  j["noise_sd"] = std::exp(r.state.log_noise_sd);
  j["lengthscale"] = r.state.kernel.lengthscale();
  j["signal_sd"] = std::exp(r.state.kernel.log_signal_sd);
  return j;
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg, std::uint64_t split_seed) {
  Dataset full;
  if (cfg.dataset == "synthetic") {
    full = synthetic_t_regression(cfg.synthetic_n, cfg.synthetic_d, cfg.synthetic_noise_df,
                                  cfg.synthetic_noise_scale, cfg.data_seed);
  } else {
    full = load_csv(cfg.dataset, cfg.target, cfg.has_header);
  }
  if (full.size() < 2) throw InputError("dataset needs at least two usable rows");
  auto [train, test] = split_standardize(full, cfg.train_frac, split_seed);
  if (train.dim() == 0) throw InputError("dataset has no non-constant feature columns");
  for (const auto& w : full.warnings) train.warnings.insert(train.warnings.begin(), w);

  PreparedData p;
  const auto n = static_cast<std::size_t>(train.size());
  p.batch = cfg.batch ? cfg.batch : std::min<std::size_t>(1024, std::max<std::size_t>(1, n / 2));
  if (cfg.inducing) {
    p.inducing = cfg.inducing;
  } else if (cfg.inducing_rule == "data") {
    p.inducing = std::max<std::size_t>(1, n / 4);
  } else if (cfg.inducing_rule == "batch") {
    p.inducing = std::max<std::size_t>(1, p.batch / 4);
  } else {
    p.inducing = default_inducing_count(n, p.batch);
  }
  p.inducing = std::min(p.inducing, n);
  p.train = std::move(train);
  p.test = std::move(test);
  return p;
}

std::string model_to_json(const SVTPState& s, const Standardization& st,
                          const std::vector<std::string>& feature_names, const std::string& target) {
  json j;
  json z = json::array();
  for (Eigen::Index i = 0; i < s.Z.rows(); ++i) z.push_back(to_std(s.Z.row(i).transpose()));
  j["Z"] = z;
  j["m"] = to_std(s.q.m);
  j["sigma"] = to_std(s.q.sigma);
  j["nu_tilde"] = s.q.nu_tilde;
  j["prior_nu"] = s.prior_nu;
  j["log_lengthscale"] = s.kernel.log_lengthscale;
  j["log_signal_sd"] = s.kernel.log_signal_sd;
  j["log_noise_sd"] = s.log_noise_sd;
  j["kzz_min_jitter"] = s.kzz_min_jitter;
  j["standardization"] = {{"x_mean", to_std(st.x_mean)},
                          {"x_sd", to_std(st.x_sd)},
                          {"y_mean", st.y_mean},
                          {"y_sd", st.y_sd}};
  j["feature_names"] = feature_names;
  j["target"] = target;
  return j.dump(2) + "\n";
}

LoadedModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open model '" + path + "'");
  const json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw InputError("model '" + path + "' is not valid JSON");
  LoadedModel m;
  try {
    const auto rows = j.at("Z").get<std::vector<std::vector<double>>>();
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    m.state.Z.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != d) throw InputError("model: ragged Z");
      m.state.Z.row(static_cast<Eigen::Index>(i)) = from_std(rows[i]).transpose();
    }
    m.state.q.m = from_std(j.at("m").get<std::vector<double>>());
    m.state.q.sigma = from_std(j.at("sigma").get<std::vector<double>>());
    m.state.q.nu_tilde = j.at("nu_tilde").get<double>();
    m.state.prior_nu = j.at("prior_nu").get<double>();
    m.state.kernel.log_lengthscale = j.at("log_lengthscale").get<double>();
    m.state.kernel.log_signal_sd = j.at("log_signal_sd").get<double>();
    m.state.log_noise_sd = j.at("log_noise_sd").get<double>();
    m.state.kzz_min_jitter = j.at("kzz_min_jitter").get<double>();
    const auto& st = j.at("standardization");
    m.standardization.x_mean = from_std(st.at("x_mean").get<std::vector<double>>());
    m.standardization.x_sd = from_std(st.at("x_sd").get<std::vector<double>>());
    m.standardization.y_mean = st.at("y_mean").get<double>();
    m.standardization.y_sd = st.at("y_sd").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.target = j.at("target").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError("model '" + path + "': " + e.what());
  }
  try {
    m.state.validate();
  } catch (const std::exception& e) {
    throw InputError("model '" + path + "': " + e.what());
  }
  return m;
}

int cmd_train(const RunConfig& cfg_in, std::ostream& out, std::ostream& err) {
  RunConfig cfg = cfg_in;
  PreparedData data;
  SVTPState s0;
  try {
    cfg.validate();
    data = prepare_data(cfg, cfg.seed);
    cfg = resolved(cfg, data);
    s0 = initial_state(data.train, data.inducing, cfg.seed, cfg.init_options());
    s0.kzz_min_jitter = cfg.kzz_jitter;
    make_out_dir(cfg.out);
    write_text(fs::path(cfg.out) / "config.json", config_to_json(cfg));
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto& w : data.train.warnings) err << "warning: " << w << "\n";

  const fs::path dir(cfg.out);
  const auto sngd = cfg.sngd_config(data.batch, cfg.seed);
  json summary;
  summary["config"] = json::parse(config_to_json(cfg));
  summary["n_train"] = data.train.size();
  summary["n_test"] = data.test.size();
  summary["input_dim"] = data.train.dim();
  summary["feature_names"] = data.train.feature_names;
  summary["warnings"] = data.train.warnings;
  const auto start = std::chrono::steady_clock::now();
  try {
    MetricsWriter writer(dir / "metrics.csv", cfg.record_wall_time);
    const auto result = train(s0, data.train, &data.test, sngd, cfg.adam_config(),
                              cfg.train_mode(), std::ref(writer));
    write_text(dir / "final_model.json",
               model_to_json(result.state, data.train.standardization, data.train.feature_names,
                             cfg.target));
    summary["status"] = "ok";
    summary["result"] = run_stats(result);
    summary["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(dir / "run_summary.json", summary.dump(2) + "\n");
    out << "mode=" << cfg.mode << " iters=" << result.records.size()
        << " final_neg_elbo=" << (result.final_neg_elbo ? fmt(*result.final_neg_elbo) : "n/a")
        << " final_test_mse=" << (result.final_test_mse ? fmt(*result.final_test_mse) : "n/a")
        << "\n";
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    summary["status"] = "failed";
    summary["error"] = e.what();
    try {
      write_text(dir / "run_summary.json", summary.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    err << "error: training failed: " << e.what() << "\n";
    return kExitNumerical;
  }
}

int cmd_compare(const RunConfig& cfg_in, std::ostream& out, std::ostream& err,
                const RunHook& hook) {
  RunConfig cfg = cfg_in;
  try {
    cfg.validate();
    // Surface data problems before anything is written.
    cfg = resolved(cfg, prepare_data(cfg, cfg.seed));
    make_out_dir(cfg.out);
    write_text(fs::path(cfg.out) / "config.json", config_to_json(cfg));
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path dir(cfg.out);
  std::map<std::string, std::vector<double>> elbos, mses;
  std::map<std::string, std::size_t> failed;
  json runs = json::array();
  bool any_failed = false;

  for (std::size_t k = 0; k < cfg.n_seeds; ++k) {
    const std::uint64_t run_seed = cfg.seed + k;
    PreparedData data;
    SVTPState s0;
    try {
      data = prepare_data(cfg, run_seed);
      s0 = initial_state(data.train, data.inducing, run_seed, cfg.init_options());
      s0.kzz_min_jitter = cfg.kzz_jitter;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    for (const auto& mode : cfg.modes) {
      const std::string name = "trace_" + mode + "_seed" + std::to_string(k) + ".csv";
      const fs::path partial = dir / (name + ".partial");
      json run{{"mode", mode}, {"seed_index", k}, {"seed", run_seed}, {"trace", name}};
      try {
        if (hook) hook(mode, k);
        TrainResult result;
        {
          MetricsWriter writer(partial, cfg.record_wall_time);
          result = train(s0, data.train, &data.test, cfg.sngd_config(data.batch, run_seed),
                         cfg.adam_config(), parse_train_mode(mode), std::ref(writer));
        }
        fs::rename(partial, dir / name);
        run["status"] = "ok";
        run["result"] = run_stats(result);
        if (result.final_neg_elbo) elbos[mode].push_back(*result.final_neg_elbo);
        if (result.final_test_mse) mses[mode].push_back(*result.final_test_mse);
        out << mode << " seed" << k << ": final_neg_elbo="
            << (result.final_neg_elbo ? fmt(*result.final_neg_elbo) : "n/a") << " final_test_mse="
            << (result.final_test_mse ? fmt(*result.final_test_mse) : "n/a") << "\n";
      } catch (const std::exception& e) {
        any_failed = true;
        ++failed[mode];
        run["status"] = "failed";
        run["error"] = e.what();
        err << "error: " << mode << " seed" << k << " failed: " << e.what() << "\n";
      }
      runs.push_back(run);
    }
  }

  json modes = json::object();
  for (const auto& mode : cfg.modes) {
    modes[mode] = {{"completed", elbos[mode].size()},
                   {"failed", failed[mode]},
                   {"median_final_neg_elbo", elbos[mode].empty() ? json(nullptr) : json(median(elbos[mode]))},
                   {"median_final_test_mse", mses[mode].empty() ? json(nullptr) : json(median(mses[mode]))}};
    out << "median " << mode << ": neg_elbo="
        << (elbos[mode].empty() ? "n/a" : fmt(median(elbos[mode])))
        << " test_mse=" << (mses[mode].empty() ? "n/a" : fmt(median(mses[mode]))) << "\n";
  }
  json summary{{"config", json::parse(config_to_json(cfg))}, {"modes", modes}, {"runs", runs}};
  try {
    write_text(dir / "compare_summary.json", summary.dump(2) + "\n");
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return any_failed ? kExitNumerical : kExitOk;
}

int cmd_fisher_verify(const RunConfig& cfg_in, std::ostream& out, std::ostream& err) {
  RunConfig cfg = cfg_in;
  try {
    cfg.validate();
    make_out_dir(cfg.out);
    write_text(fs::path(cfg.out) / "config.json", config_to_json(cfg));
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  fisher::GridSpec spec;
  spec.n_samples = cfg.fisher_samples;
  spec.seed = cfg.fisher_seed;
  spec.sigmas_per_point = cfg.fisher_sigmas;
  spec.mode = cfg.paper_literal ? fisher::Mode::PaperLiteral : fisher::Mode::Reconciled;
  const auto report = fisher::verify_grid(spec);

  json points = json::array();
  for (const auto& p : report.points) {
    json entries = json::array();
    for (const auto& e : p.entries) {
      char line[256];
      std::snprintf(line, sizeof line,
                    "M=%d nu=%-6g %-9s (%d,%d) %-7s closed=%-13.6g oracle=%-13.6g se=%-10.3g %s\n",
                    p.M, p.nu_tilde, e.block.c_str(), e.i, e.j, to_string(e.kind).c_str(),
                    e.closed_form, e.oracle, e.stderr, e.pass ? "PASS" : "FAIL");
      out << line;
      entries.push_back({{"block", e.block},
                         {"i", e.i},
                         {"j", e.j},
                         {"kind", to_string(e.kind)},
                         {"closed_form", e.kind == fisher::EntryKind::Shipped ? json(e.closed_form) : json(0.0)},
                         {"oracle", e.oracle},
                         {"stderr", e.stderr},
                         {"tolerance", e.tolerance},
                         {"pass", e.pass}});
    }
    points.push_back({{"M", p.M},
                      {"nu_tilde", p.nu_tilde},
                      {"sigma", to_std(p.sigma)},
                      {"reference_point", p.reference_point},
                      {"shipped_failures", p.failures(fisher::EntryKind::Shipped)},
                      {"zero_failures", p.failures(fisher::EntryKind::Zero)},
                      {"entries", entries}});
  }
  const std::size_t shipped_fail = report.failures(fisher::EntryKind::Shipped);
  const std::size_t zero_fail = report.failures(fisher::EntryKind::Zero);
  json j{{"mode", cfg.paper_literal ? "paper_literal" : "reconciled"},
         {"n_samples", spec.n_samples},
         {"seed", spec.seed},
         {"relative_tolerance", spec.relative_tolerance},
         {"stderr_multiple", spec.stderr_multiple},
         {"seconds", report.seconds},
         {"shipped_entries", report.entries(fisher::EntryKind::Shipped)},
         {"shipped_failures", shipped_fail},
         {"zero_entries", report.entries(fisher::EntryKind::Zero)},
         {"zero_failures", zero_fail},
         {"points", points}};
  try {
    write_text(fs::path(cfg.out) / "fisher_report.json", j.dump(2) + "\n");
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  out << "mode=" << j["mode"].get<std::string>() << " shipped failures " << shipped_fail << "/"
      << report.entries(fisher::EntryKind::Shipped) << ", zero-block failures " << zero_fail << "/"
      << report.entries(fisher::EntryKind::Zero) << " (" << std::fixed << std::setprecision(1)
      << report.seconds << " s)\n" << std::defaultfloat << std::setprecision(6);
  return shipped_fail + zero_fail == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  LoadedModel model;
  Matrix x;
  std::vector<std::string> warnings;
  try {
    if (cfg.model_path.empty()) throw InputError("predict needs --model");
    if (cfg.input_path.empty()) throw InputError("predict needs --input");
    model = load_model(cfg.model_path);
    x = load_features(cfg.input_path, model.feature_names, cfg.has_header, &warnings);
    make_out_dir(cfg.out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  try {
    const auto pred =
        predict(model.state, standardize_x(x, model.standardization), cfg.n_mc_eval, cfg.seed);
    const Vector mean = unstandardize_y(pred.mean, model.standardization);
    const double sd2 = model.standardization.y_sd * model.standardization.y_sd;
    std::ofstream f(fs::path(cfg.out) / "predictions.csv");
    if (!f) throw InputError("cannot write predictions.csv");
    f << "mean,variance\n";
    for (Eigen::Index i = 0; i < mean.size(); ++i)
      f << fmt(mean(i)) << ',' << fmt(pred.variance(i) * sd2) << '\n';
    out << "wrote " << mean.size() << " predictions to "
        << (fs::path(cfg.out) / "predictions.csv").string() << "\n";
    return kExitOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: prediction failed: " << e.what() << "\n";
    return kExitNumerical;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse variational Student-t process regression with natural gradients"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, dataset, target, mode, modes, out, model, input, sigma_init;
    std::size_t iters = 0, batch = 0, n_mc = 0, n_seeds = 0, inducing = 0, eval_every = 0;
    std::size_t fisher_samples = 0, synthetic_n = 0;
    double lr = 0.0, noise_scale = 0.0;
    std::uint64_t seed = 0;
  } f;
  bool paper_literal = false, no_header = false, wall_time = false;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "config file (JSON or key = value lines)");
    auto opt = [&](const char* name, auto& target, const char* help, auto apply) {
      overrides.emplace_back(sub->add_option(name, target, help), apply);
    };
    opt("--dataset", f.dataset, "CSV path or 'synthetic'", [&](RunConfig& c) { c.dataset = f.dataset; });
    opt("--target", f.target, "target column name or index", [&](RunConfig& c) { c.target = f.target; });
    opt("--mode", f.mode, "sngd | adam_all | sgd_all", [&](RunConfig& c) { c.mode = f.mode; });
    opt("--modes", f.modes, "comma-separated modes for compare", [&](RunConfig& c) {
      c.modes.clear();
      std::stringstream ss(f.modes);
      std::string item;
      while (std::getline(ss, item, ',')) if (!item.empty()) c.modes.push_back(item);
    });
    opt("--iters", f.iters, "iterations", [&](RunConfig& c) { c.iters = f.iters; });
    opt("--batch", f.batch, "mini-batch size", [&](RunConfig& c) { c.batch = f.batch; });
    opt("--lr", f.lr, "step size", [&](RunConfig& c) { c.lr = f.lr; });
    opt("--n-mc", f.n_mc, "Monte-Carlo samples per ELBO", [&](RunConfig& c) { c.n_mc = f.n_mc; });
    opt("--seed", f.seed, "seed", [&](RunConfig& c) { c.seed = f.seed; });
    opt("--n-seeds", f.n_seeds, "seeds for compare", [&](RunConfig& c) { c.n_seeds = f.n_seeds; });
    opt("--inducing", f.inducing, "number of inducing points", [&](RunConfig& c) { c.inducing = f.inducing; });
    opt("--eval-every", f.eval_every, "test MSE cadence (0 disables)", [&](RunConfig& c) { c.eval_every = f.eval_every; });
    opt("--fisher-samples", f.fisher_samples, "Monte-Carlo samples per grid point",
        [&](RunConfig& c) { c.fisher_samples = f.fisher_samples; });
    opt("--synthetic-n", f.synthetic_n, "rows of the synthetic dataset", [&](RunConfig& c) { c.synthetic_n = f.synthetic_n; });
    opt("--noise-scale", f.noise_scale, "synthetic noise scale", [&](RunConfig& c) { c.synthetic_noise_scale = f.noise_scale; });
    opt("--sigma-init", f.sigma_init, "unit | prior_mean_field", [&](RunConfig& c) { c.sigma_init = f.sigma_init; });
    opt("--out", f.out, "output directory", [&](RunConfig& c) { c.out = f.out; });
    opt("--model", f.model, "final_model.json for predict", [&](RunConfig& c) { c.model_path = f.model; });
    opt("--input", f.input, "feature CSV for predict", [&](RunConfig& c) { c.input_path = f.input; });
    overrides.emplace_back(sub->add_flag("--paper-literal", paper_literal, "use the published Fisher constants"),
                           [&](RunConfig& c) { c.paper_literal = true; });
    overrides.emplace_back(sub->add_flag("--no-header", no_header, "CSV files have no header row"),
                           [&](RunConfig& c) { c.has_header = false; });
    overrides.emplace_back(sub->add_flag("--wall-time", wall_time, "record wall time in metrics.csv"),
                           [&](RunConfig& c) { c.record_wall_time = true; });
  };

  std::vector<CLI::App*> subs;
  const std::pair<const char*, const char*> commands[] = {
      {"train", "train one model and write metrics.csv, final_model.json, run_summary.json"},
      {"compare", "run every mode over several seeds and write traces plus compare_summary.json"},
      {"fisher-verify", "check the closed-form Fisher blocks against the Monte-Carlo Fisher"},
      {"predict", "predictive mean and variance from a saved model"}};
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    add_common(sub);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    if (!f.config.empty()) cfg = load_config_file(f.config);
    for (auto& [opt, apply] : overrides)
      if (opt->count() > 0) apply(cfg);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (auto* sub : subs)
    if (sub->parsed()) cfg.command = sub->get_name();

  if (cfg.command == "train") return cmd_train(cfg, out, err);
  if (cfg.command == "compare") return cmd_compare(cfg, out, err);
  if (cfg.command == "fisher-verify") return cmd_fisher_verify(cfg, out, err);
  return cmd_predict(cfg, out, err);
}

}  // namespace svtp::cli
