#include "svtp/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "svtp/errors.hpp"

namespace svtp {

using nlohmann::json;

namespace {

#define SVTP_CONFIG_FIELDS(X)                                                              \
  X(command) X(dataset) X(target) X(has_header) X(train_frac) X(data_seed) X(synthetic_n) \
  X(synthetic_d) X(synthetic_noise_df) X(synthetic_noise_scale) X(inducing)               \
  X(inducing_rule) X(prior_nu) X(init_nu_tilde) X(init_noise_fraction) X(sigma_init)      \
  X(kzz_jitter) X(mode) X(modes) X(iters) X(batch) X(lr) X(adam_lr) X(adam_beta1)         \
  X(adam_beta2) X(adam_epsilon) X(n_mc) X(n_mc_eval) X(eval_every) X(seed) X(n_seeds)     \
  X(nu_floor) X(sigma_floor) X(backtrack_max) X(paper_literal) X(damping_relative)        \
  X(damping_max_doublings) X(record_wall_time) X(fisher_samples) X(fisher_seed)           \
  X(fisher_sigmas) X(model_path) X(input_path) X(out)

json to_json_object(const RunConfig& c) {
  json j;
#define X(f) j[#f] = c.f;
  SVTP_CONFIG_FIELDS(X)
#undef X
  return j;
}

RunConfig from_json_object(const json& j, RunConfig c) {
  if (!j.is_object()) throw InputError("config: expected an object of key/value pairs");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    bool known = false;
    try {
#define X(f)                                       \
  if (key == #f) {                                 \
    c.f = it.value().get<decltype(RunConfig::f)>(); \
    known = true;                                  \
  }
      SVTP_CONFIG_FIELDS(X)
#undef X
    } catch (const json::exception& e) {
      throw InputError("config: bad value for '" + key + "': " + e.what());
    }
    if (!known) throw InputError("config: unknown key '" + key + "'");
  }
  return c;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

json parse_flat(const std::string& text) {
  json j = json::object();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    json v = json::parse(value, nullptr, false);
    if (v.is_discarded()) v = value;
    if (key == "modes" && v.is_string()) {
      // modes = sngd, adam_all
      json list = json::array();
      std::istringstream items(value);
      for (std::string item; std::getline(items, item, ',');)
        if (!trim(item).empty()) list.push_back(trim(item));
      v = list;
    }
    j[key] = v;
  }
  return j;
}

}  // namespace

void RunConfig::validate() const {
  static const std::vector<std::string> commands{"train", "compare", "fisher-verify", "predict"};
  if (std::find(commands.begin(), commands.end(), command) == commands.end())
    throw InputError("config: unknown command '" + command + "'");
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw InputError("config: train_frac must lie in (0, 1)");
  if (inducing_rule != "auto" && inducing_rule != "data" && inducing_rule != "batch")
    throw InputError("config: inducing_rule must be auto, data or batch");
  parse_train_mode(mode);
  for (const auto& m : modes) parse_train_mode(m);
  parse_sigma_init(sigma_init);
  if (!(lr > 0.0)) throw InputError("config: lr must be positive");
  if (n_mc < 1 || n_mc_eval < 1) throw InputError("config: n_mc and n_mc_eval must be >= 1");
  if (n_seeds < 1) throw InputError("config: n_seeds must be >= 1");
  if (!(prior_nu > 2.0) || !(init_nu_tilde > 2.0)) throw InputError("config: dof values must exceed 2");
  if (!(synthetic_noise_df > 2.0)) throw InputError("config: synthetic_noise_df must exceed 2");
  if (fisher_samples < 10000) throw InputError("config: fisher_samples must be >= 10000");
  if (fisher_sigmas < 1) throw InputError("config: fisher_sigmas must be >= 1");
  if (!(nu_floor > 2.0) || !(sigma_floor > 0.0)) throw InputError("config: floors must satisfy nu_floor > 2, sigma_floor > 0");
  if (backtrack_max < 0) throw InputError("config: backtrack_max must be nonnegative");
  if (!(kzz_jitter >= 0.0)) throw InputError("config: kzz_jitter must be nonnegative");
  adam_config().validate();
}

SNGDConfig RunConfig::sngd_config(std::size_t resolved_batch, std::uint64_t run_seed) const {
  SNGDConfig c;
  c.step_size = lr;
  c.batch_size = resolved_batch;
  c.n_mc = n_mc;
  c.max_iters = iters;
  c.seed = run_seed;
  c.nu_floor = nu_floor;
  c.sigma_floor = sigma_floor;
  c.backtrack_max = backtrack_max;
  c.eval_every = eval_every;
  c.n_mc_eval = n_mc_eval;
  c.record_wall_time = record_wall_time;
  c.fisher_mode = paper_literal ? fisher::Mode::PaperLiteral : fisher::Mode::Reconciled;
  c.damping.relative = damping_relative;
  c.damping.max_doublings = damping_max_doublings;
  return c;
}

AdamConfig RunConfig::adam_config() const {
  AdamConfig a;
  a.step_size = adam_lr < 0.0 ? lr : adam_lr;
  a.beta1 = adam_beta1;
  a.beta2 = adam_beta2;
  a.epsilon = adam_epsilon;
  return a;
}

InitOptions RunConfig::init_options() const {
  InitOptions o;
  o.sigma_init = parse_sigma_init(sigma_init);
  o.nu_tilde = init_nu_tilde;
  o.prior_nu = prior_nu;
  o.noise_fraction = init_noise_fraction;
  return o;
}

std::string config_to_json(const RunConfig& c) { return to_json_object(c).dump(2) + "\n"; }

RunConfig config_from_text(const std::string& text, const RunConfig& base) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InputError("config: malformed JSON");
    return from_json_object(j, base);
  }
  return from_json_object(parse_flat(text), base);
}

RunConfig load_config_file(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str(), base);
}

}  // namespace svtp
