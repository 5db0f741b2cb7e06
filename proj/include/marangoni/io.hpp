#pragma once

// Serialization shared by the CLI and tests: decimal text with 17 significant
// digits (round-trip exact for doubles), flat plot tables, and json adapters
// for the containers that appear in configs and reports.

#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "marangoni/control.hpp"
#include "marangoni/pdesim.hpp"
#include "marangoni/profile.hpp"
#include "marangoni/quadratic.hpp"

namespace marangoni {

using Json = nlohmann::json;

std::string format_g17(double x);

// tab-separated numeric table with a header line
struct Table {
  std::vector<std::string> cols;
  std::vector<std::vector<double>> rows;

  explicit Table(std::vector<std::string> names) : cols(std::move(names)) {}
  void add(std::initializer_list<double> r);
  std::string tsv() const;
};

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// 64-bit FNV-1a over the canonical (sorted-key) dump, as 16 hex digits
std::string config_digest(const Json& j);

Json vec_json(const Vec& v);
Json mat_json(const Mat& m);
Json tensor_json(const Tensor3R& t);
Vec vec_from_json(const Json& j);
Mat mat_from_json(const Json& j);
Tensor3R tensor_from_json(const Json& j);

// h is optional and defaults to 10 log(nu); d defaults to empty (untuned)
ProfileParams profile_from_json(const Json& j);
Json profile_json(const ProfileParams& p);

Grid grid_from_json(const Json& j, double default_h);

// {"p":., "R":[[..]], "f":[..], "D":{tensor}, "R0":.}; f, D, R0 optional
TargetField target_from_json(const Json& j);

Json source_json(const HeatSource2D& s);
HeatSource2D source_from_json(const Json& j);

}  // namespace marangoni
