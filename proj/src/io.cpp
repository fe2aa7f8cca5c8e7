#include "fnlslab/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <system_error>

namespace fnls {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  if (!j.is_object())
    throw config_error(std::string("config: '") + where +
                       "' must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) { known = true; break; }
    if (!known)
      throw config_error(std::string("config: unknown key '") + where + "." +
                         item.key() + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  double x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw config_error("override " + key + ": cannot parse '" + v +
                       "' as a real");
  return x;
}

template <typename Int>
Int parse_int(const std::string& v, const std::string& key) {
  Int x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw config_error("override " + key + ": cannot parse '" + v +
                       "' as an integer");
  return x;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error("override " + key + ": expected true/false");
}

Method parse_method(const std::string& v) {
  if (v == "ifrk4") return Method::ifrk4;
  throw config_error("config: unknown integrator.method '" + v + "'");
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  grid.validate();
  integrator.validate();
  tau.validate(model);
  if (samples < 1) throw config_error("config: samples must be >= 1");
  if (!std::isfinite(t_final)) throw config_error("config: t_final must be finite");
  if (output_dir.empty()) throw config_error("config: output_dir must be nonempty");
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return json{
      {"model",
       {{"alpha", c.model.alpha},
        {"s", c.model.s},
        {"gamma", c.model.gamma},
        {"sign", c.model.sign},
        {"gamma_override", c.model.gamma_override}}},
      {"grid", {{"n_trunc", c.grid.n_trunc}, {"n_pad", c.grid.n_pad}}},
      {"integrator",
       {{"dt", c.integrator.dt},
        {"method", "ifrk4"},
        {"record_every", c.integrator.record_every}}},
      {"tau",
       {{"q", c.tau.q},
        {"eps_dyadic", c.tau.eps_dyadic},
        {"c0", c.tau.c0},
        {"c1", c.tau.c1},
        {"m_cap", c.tau.m_cap},
        {"b_slack", c.tau.b_slack}}},
      {"seed", c.seed},
      {"samples", c.samples},
      {"t_final", c.t_final},
      {"output_dir", c.output_dir}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  check_keys(j, {"model", "grid", "integrator", "tau", "seed", "samples",
                 "t_final", "output_dir"},
             "");
  ExperimentConfig c;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, {"alpha", "s", "gamma", "sign", "gamma_override"}, "model");
    c.model.alpha = m.value("alpha", c.model.alpha);
    c.model.s = m.value("s", c.model.s);
    c.model.gamma = m.value("gamma", c.model.gamma);
    c.model.sign = m.value("sign", c.model.sign);
    c.model.gamma_override = m.value("gamma_override", c.model.gamma_override);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"n_trunc", "n_pad"}, "grid");
    c.grid.n_trunc = g.value("n_trunc", c.grid.n_trunc);
    // n_pad follows the cutoff unless pinned explicitly
    c.grid.n_pad = g.value("n_pad", 4 * c.grid.n_trunc + 1);
  }
  if (j.contains("integrator")) {
    const auto& i = j.at("integrator");
    check_keys(i, {"dt", "method", "record_every"}, "integrator");
    c.integrator.dt = i.value("dt", c.integrator.dt);
    c.integrator.method = parse_method(i.value("method", "ifrk4"));
    c.integrator.record_every = i.value("record_every", c.integrator.record_every);
  }
  if (j.contains("tau")) {
    const auto& t = j.at("tau");
    check_keys(t, {"q", "eps_dyadic", "c0", "c1", "m_cap", "b_slack"}, "tau");
    c.tau.q = t.value("q", c.tau.q);
    c.tau.eps_dyadic = t.value("eps_dyadic", c.tau.eps_dyadic);
    c.tau.c0 = t.value("c0", c.tau.c0);
    c.tau.c1 = t.value("c1", c.tau.c1);
    c.tau.m_cap = t.value("m_cap", c.tau.m_cap);
    c.tau.b_slack = t.value("b_slack", c.tau.b_slack);
  }
  c.seed = j.value("seed", c.seed);
  c.samples = j.value("samples", c.samples);
  c.t_final = j.value("t_final", c.t_final);
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("config: cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw config_error("config: JSON parse failure in '" + path +
                       "': " + e.what());
  }
  return config_from_json(j);
}

void apply_override(ExperimentConfig& c, const std::string& key,
                    const std::string& value) {
  if (key == "model.alpha") c.model.alpha = parse_double(value, key);
  else if (key == "model.s") c.model.s = parse_double(value, key);
  else if (key == "model.gamma") c.model.gamma = parse_double(value, key);
  else if (key == "model.sign") c.model.sign = parse_int<int>(value, key);
  else if (key == "model.gamma_override")
    c.model.gamma_override = parse_bool(value, key);
  else if (key == "grid.n_trunc") {
    c.grid.n_trunc = parse_int<int>(value, key);
    c.grid.n_pad = 4 * c.grid.n_trunc + 1;
  } else if (key == "grid.n_pad") c.grid.n_pad = parse_int<int>(value, key);
  else if (key == "integrator.dt") c.integrator.dt = parse_double(value, key);
  else if (key == "integrator.method") c.integrator.method = parse_method(value);
  else if (key == "integrator.record_every")
    c.integrator.record_every = parse_int<int>(value, key);
  else if (key == "tau.q") c.tau.q = parse_double(value, key);
  else if (key == "tau.eps_dyadic") c.tau.eps_dyadic = parse_double(value, key);
  else if (key == "tau.c0") c.tau.c0 = parse_double(value, key);
  else if (key == "tau.c1") c.tau.c1 = parse_double(value, key);
  else if (key == "tau.m_cap") c.tau.m_cap = parse_int<int>(value, key);
  else if (key == "tau.b_slack") c.tau.b_slack = parse_double(value, key);
  else if (key == "seed") c.seed = parse_int<uint64_t>(value, key);
  else if (key == "samples") c.samples = parse_int<int64_t>(value, key);
  else if (key == "t_final") c.t_final = parse_double(value, key);
  else if (key == "output_dir") c.output_dir = value;
  else throw config_error("override: unknown key '" + key + "'");
}

std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::string& preamble,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (!preamble.empty()) f << "# " << preamble << '\n';
  for (size_t i = 0; i < header.size(); ++i)
    f << header[i] << (i + 1 < header.size() ? "," : "");
  f << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("csv row width mismatch in '" + path + "'");
    for (size_t i = 0; i < row.size(); ++i)
      f << row[i] << (i + 1 < row.size() ? "," : "");
    f << '\n';
  }
  if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

std::string git_describe() {
  FILE* p = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!p) return "unknown";
  char buf[128];
  std::string out;
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  ::pclose(p);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r'))
    out.pop_back();
  return out.empty() ? "unknown" : out;
}

nlohmann::json run_manifest(const std::string& command,
                            const ExperimentConfig& c, double wall_seconds,
                            const nlohmann::json& summary) {
  return json{{"command", command},
              {"config", config_to_json(c)},
              {"git_describe", git_describe()},
              {"wall_time_seconds", wall_seconds},
              {"summary", summary}};
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("write failure on '" + path + "'");
}

}  // namespace fnls
