#include "ssmlab/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ssmlab/error.hpp"

namespace ssmlab {

namespace {

using nlohmann::json;

json mat_json(const Mat& m) { return json(m.to_rows()); }

Mat read_mat(const json& j, const char* field, std::size_t rows, std::size_t cols) {
  if (!j.contains(field)) throw Error(Errc::BadConfig, std::string("missing field '") + field + "'");
  std::vector<std::vector<double>> data;
  try {
    data = j.at(field).get<std::vector<std::vector<double>>>();
  } catch (const json::exception&) {
    throw Error(Errc::BadConfig, std::string("field '") + field + "' must be a nested array of numbers");
  }
  if (data.size() != rows)
    throw Error(Errc::BadConfig, std::string("field '") + field + "' must have " + std::to_string(rows) + " rows");
  for (const auto& r : data)
    if (r.size() != cols)
      throw Error(Errc::BadConfig, std::string("field '") + field + "' must have " + std::to_string(cols) + " columns");
  return rows == 0 ? Mat(0, cols) : Mat::from_rows(data);
}

std::size_t read_dim(const json& j, const char* field) {
  if (!j.contains(field) || !j.at(field).is_number_unsigned() || j.at(field).get<std::size_t>() == 0)
    throw Error(Errc::BadConfig, std::string("field '") + field + "' must be a positive integer");
  return j.at(field).get<std::size_t>();
}

std::string read_string(const json& j, const char* field, const char* fallback) {
  if (!j.contains(field)) return fallback;
  if (!j.at(field).is_string()) throw Error(Errc::BadConfig, std::string("field '") + field + "' must be a string");
  return j.at(field).get<std::string>();
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::Sigmoid ? "sigmoid" : "tanh01"; }
std::string to_string(GateMode m) { return m == GateMode::InputOnly ? "input_only" : "input_and_state"; }
std::string to_string(UpdateForm f) { return f == UpdateForm::Pure ? "pure" : "retentive"; }

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh01") return Activation::Tanh01;
  throw Error(Errc::BadConfig, "field 'gate.activation' must be sigmoid or tanh01, got '" + s + "'");
}

GateMode gate_mode_from_string(const std::string& s) {
  if (s == "input_only") return GateMode::InputOnly;
  if (s == "input_and_state") return GateMode::InputAndState;
  throw Error(Errc::BadConfig, "field 'gate.mode' must be input_only or input_and_state, got '" + s + "'");
}

UpdateForm update_form_from_string(const std::string& s) {
  if (s == "pure") return UpdateForm::Pure;
  if (s == "retentive") return UpdateForm::Retentive;
  throw Error(Errc::BadConfig, "field 'form' must be pure or retentive, got '" + s + "'");
}

Model model_from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::BadConfig, std::string("model is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::BadConfig, "model document must be a JSON object");
  const std::size_t d = read_dim(j, "d");
  const std::size_t m = read_dim(j, "m");
  const std::size_t n = read_dim(j, "n");
  Model model;
  model.params.a = read_mat(j, "a", d, d);
  model.params.b = read_mat(j, "b", d, m);
  model.params.c = read_mat(j, "c", n, d);
  model.params.q = j.contains("q") ? read_mat(j, "q", d, d) : Mat(d, d);
  model.params.r = j.contains("r") ? read_mat(j, "r", n, n) : Mat(n, n);
  model.form = update_form_from_string(read_string(j, "form", "retentive"));
  if (j.contains("gate") && !j.at("gate").is_null()) {
    const json& g = j.at("gate");
    if (!g.is_object()) throw Error(Errc::BadConfig, "field 'gate' must be an object or null");
    GateParams gp;
    gp.w = read_mat(g, "w", d, m);
    gp.u = g.contains("u") ? read_mat(g, "u", d, d) : Mat(d, d);
    try {
      gp.bias = g.at("bias").get<Vec>();
    } catch (const json::exception&) {
      throw Error(Errc::BadConfig, "field 'gate.bias' must be an array of numbers");
    }
    if (gp.bias.size() != d) throw Error(Errc::BadConfig, "field 'gate.bias' must have length d");
    gp.activation = activation_from_string(read_string(g, "activation", "sigmoid"));
    gp.mode = gate_mode_from_string(read_string(g, "mode", "input_only"));
    model.gate = std::move(gp);
  }
  try {
    model.validate();
  } catch (const Error& e) {
    throw Error(Errc::BadConfig, std::string("model failed validation: ") + e.what());
  }
  return model;
}

std::string model_to_json_string(const Model& model) {
  const SsmParams& p = model.params;
  json j = {{"d", p.state_dim()},   {"m", p.input_dim()}, {"n", p.output_dim()}, {"a", mat_json(p.a)},
            {"b", mat_json(p.b)},   {"c", mat_json(p.c)}, {"q", mat_json(p.q)},   {"r", mat_json(p.r)},
            {"form", to_string(model.form)}};
  if (model.gate) {
    const GateParams& g = *model.gate;
    j["gate"] = {{"w", mat_json(g.w)},
                 {"u", mat_json(g.u)},
                 {"bias", g.bias},
                 {"activation", to_string(g.activation)},
                 {"mode", to_string(g.mode)}};
  } else {
    j["gate"] = nullptr;
  }
  return j.dump(2) + "\n";
}

Model load_model(const std::filesystem::path& path) { return model_from_json_string(read_text_file(path)); }

void save_model(const std::filesystem::path& path, const Model& model) {
  write_text_file(path, model_to_json_string(model));
}

std::string trajectory_to_json_string(const Trajectory& traj) {
  json j = {{"seed", traj.seed},
            {"steps", traj.length()},
            {"inputs", mat_json(traj.inputs)},
            {"states", mat_json(traj.states)},
            {"outputs", mat_json(traj.outputs)},
            {"gates", mat_json(traj.gates)}};
  return j.dump() + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::InvalidConfig, "cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw Error(Errc::InvalidConfig, "failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::InvalidConfig, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace ssmlab
