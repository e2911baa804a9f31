#include <filesystem>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ssmlab/error.hpp"
#include "ssmlab/model_io.hpp"
#include "ssmlab/training.hpp"

namespace ssmlab {
namespace {

using nlohmann::json;

Errc code_of(const std::string& text) {
  try {
    model_from_json_string(text);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidConfig;
}

std::string message_of(const std::string& text) {
  try {
    model_from_json_string(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(ModelJson, RoundTripGated) {
  const Model m = init_model(InitOptions{5, 3, 2, true, UpdateForm::Pure, Activation::Tanh01,
                                         GateMode::InputAndState, 1e-3, 4});
  const Model back = model_from_json_string(model_to_json_string(m));
  EXPECT_EQ(back.params.a, m.params.a);
  EXPECT_EQ(back.params.b, m.params.b);
  EXPECT_EQ(back.params.c, m.params.c);
  EXPECT_EQ(back.params.q, m.params.q);
  EXPECT_EQ(back.params.r, m.params.r);
  ASSERT_TRUE(back.gate.has_value());
  EXPECT_EQ(back.gate->w, m.gate->w);
  EXPECT_EQ(back.gate->u, m.gate->u);
  EXPECT_EQ(back.gate->bias, m.gate->bias);
  EXPECT_EQ(back.gate->activation, Activation::Tanh01);
  EXPECT_EQ(back.gate->mode, GateMode::InputAndState);
  EXPECT_EQ(back.form, UpdateForm::Pure);
}

TEST(ModelJson, SchemaKeys) {
  const Model m = init_model(InitOptions{2, 1, 1, true, UpdateForm::Retentive, Activation::Sigmoid,
                                         GateMode::InputOnly, 1e-3, 1});
  const json j = json::parse(model_to_json_string(m));
  for (const char* key : {"d", "m", "n", "a", "b", "c", "q", "r", "gate", "form"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["gate"]["activation"], "sigmoid");
  EXPECT_EQ(j["gate"]["mode"], "input_only");
  EXPECT_EQ(j["form"], "retentive");
  EXPECT_EQ(j["a"].size(), 2u);
}

TEST(ModelJson, UngatedAndNullGate) {
  const std::string text = R"({"d":1,"m":1,"n":1,"a":[[0.5]],"b":[[1]],"c":[[1]],"q":[[0.1]],"r":[[0.1]],
                               "gate":null,"form":"retentive"})";
  const Model m = model_from_json_string(text);
  EXPECT_FALSE(m.gate.has_value());
  EXPECT_EQ(m.params.a(0, 0), 0.5);
  const Model again = model_from_json_string(model_to_json_string(m));
  EXPECT_FALSE(again.gate.has_value());
}

TEST(ModelJson, BadConfigNamesField) {
  const std::string base = R"({"d":2,"m":1,"n":1,"a":[[1,0],[0,1]],"b":[[1],[1]],"c":[[1,1]],"form":"pure"})";
  EXPECT_NO_THROW(model_from_json_string(base));

  json j = json::parse(base);
  j["a"] = {{1, 0}};
  EXPECT_EQ(code_of(j.dump()), Errc::BadConfig);
  EXPECT_NE(message_of(j.dump()).find("'a'"), std::string::npos);

  j = json::parse(base);
  j["form"] = "sideways";
  EXPECT_NE(message_of(j.dump()).find("form"), std::string::npos);

  j = json::parse(base);
  j.erase("c");
  EXPECT_NE(message_of(j.dump()).find("'c'"), std::string::npos);

  j = json::parse(base);
  j["gate"] = {{"w", {{0}, {0}}}, {"u", {{0, 0}, {0, 0}}}, {"bias", {0, 0}}, {"activation", "relu"}};
  EXPECT_NE(message_of(j.dump()).find("activation"), std::string::npos);

  EXPECT_EQ(code_of("{not json"), Errc::BadConfig);
  EXPECT_EQ(code_of("[1,2]"), Errc::BadConfig);
}

TEST(ModelJson, EnumStrings) {
  EXPECT_EQ(activation_from_string(to_string(Activation::Tanh01)), Activation::Tanh01);
  EXPECT_EQ(gate_mode_from_string(to_string(GateMode::InputAndState)), GateMode::InputAndState);
  EXPECT_EQ(update_form_from_string(to_string(UpdateForm::Pure)), UpdateForm::Pure);
}

TEST(ModelFiles, SaveLoadCreatesDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "ssmlab_model_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  const Model m = init_model(InitOptions{3, 2, 1, true, UpdateForm::Retentive, Activation::Sigmoid,
                                         GateMode::InputOnly, 1e-3, 2});
  save_model(dir / "m.json", m);
  EXPECT_EQ(load_model(dir / "m.json").params.a, m.params.a);
  std::filesystem::remove_all(dir.parent_path());
}

TEST(TrajectoryJson, HasAllFields) {
  Trajectory tr{Mat{{1}}, Mat{{2, 3}}, Mat{{4}}, Mat{{1, 0.5}}, 9};
  const json j = json::parse(trajectory_to_json_string(tr));
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["states"][0][1], 3.0);
  EXPECT_EQ(j["gates"][0][1], 0.5);
}

}  // namespace
}  // namespace ssmlab
