#pragma once

// JSON interchange for models, trajectories and reports.
//
// Model schema: {"d","m","n","a","b","c","q","r","gate":{"w","u","bias","activation","mode"},"form"},
// matrices as row-major nested arrays; "gate" may be null or absent for an ungated model.

#include <filesystem>
#include <string>

#include "ssmlab/ssm.hpp"

namespace ssmlab {

std::string to_string(Activation a);
std::string to_string(GateMode m);
std::string to_string(UpdateForm f);
Activation activation_from_string(const std::string& s);  // throws BadConfig
GateMode gate_mode_from_string(const std::string& s);
UpdateForm update_form_from_string(const std::string& s);

// Throws BadConfig naming the offending field.
Model model_from_json_string(const std::string& text);
std::string model_to_json_string(const Model& model);

Model load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const Model& model);

std::string trajectory_to_json_string(const Trajectory& traj);

// Writes text to a file, creating parent directories. Throws InvalidConfig on I/O failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ssmlab
