#include "config_file.hpp"

#include <charconv>
#include <fstream>

#include <CLI11.hpp>

#include "autolabel/error.hpp"

namespace autolabel::tools {
namespace {

nlohmann::json Scalar(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  long long i = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (ec == std::errc() && p == text.data() + text.size()) return i;
  try {
    std::size_t used = 0;
    const double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

}  // namespace

nlohmann::json LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read config file " + path.string());
  if (path.extension() == ".json") {
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
    }
  }
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  nlohmann::json root = nlohmann::json::object();
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    nlohmann::json* node = &root;
    for (const auto& parent : item.parents) node = &(*node)[parent];
    if (item.inputs.size() == 1) {
      (*node)[item.name] = Scalar(item.inputs.front());
    } else {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& v : item.inputs) list.push_back(Scalar(v));
      (*node)[item.name] = list;
    }
  }
  return root;
}

}  // namespace autolabel::tools
