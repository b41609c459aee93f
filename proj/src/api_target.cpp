#include "evofuzz/api_target.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

namespace evofuzz {

std::string_view to_string(Library library) {
  switch (library) {
    case Library::kTorchLike:
      return "torch-like";
    case Library::kTensorflowLike:
      return "tensorflow-like";
    case Library::kGeneric:
      return "generic";
  }
  return "generic";
}

Library library_from_string(std::string_view text) {
  if (text == "torch-like" || text == "torch" || text == "pytorch") return Library::kTorchLike;
  if (text == "tensorflow-like" || text == "tensorflow" || text == "tf") {
    return Library::kTensorflowLike;
  }
  if (text == "generic" || text.empty()) return Library::kGeneric;
  throw InvalidTarget("unknown library kind: " + std::string(text));
}

Library infer_library(std::string_view qualified_name) {
  auto root = qualified_name.substr(0, qualified_name.find('.'));
  if (root == "torch") return Library::kTorchLike;
  if (root == "tf" || root == "tensorflow") return Library::kTensorflowLike;
  return Library::kGeneric;
}

ApiTarget ApiTarget::make(Library library, std::string qualified_name, std::string signature) {
  if (qualified_name.empty()) throw InvalidTarget("API name is empty");
  if (std::any_of(qualified_name.begin(), qualified_name.end(),
                  [](unsigned char c) { return std::isspace(c); })) {
    throw InvalidTarget("API name contains whitespace: '" + qualified_name + "'");
  }
  if (!signature.empty()) {
    auto leaf_start = qualified_name.rfind('.');
    std::string_view leaf = qualified_name;
    if (leaf_start != std::string::npos) leaf = leaf.substr(leaf_start + 1);
    std::string_view sig = signature;
    if (!sig.starts_with(qualified_name) && !sig.starts_with(leaf)) {
      throw InvalidTarget("signature '" + signature + "' does not start with '" + qualified_name +
                          "' or '" + std::string(leaf) + "'");
    }
  }
  return ApiTarget{library, std::move(qualified_name), std::move(signature)};
}

ApiTarget ApiTarget::make(std::string qualified_name, std::string signature) {
  auto library = infer_library(qualified_name);
  return make(library, std::move(qualified_name), std::move(signature));
}

std::string_view ApiTarget::root() const {
  std::string_view name = qualified_name;
  return name.substr(0, name.find('.'));
}

std::string_view ApiTarget::leaf() const {
  std::string_view name = qualified_name;
  auto dot = name.rfind('.');
  return dot == std::string_view::npos ? name : name.substr(dot + 1);
}

std::vector<std::string> library_prefixes(const ApiTarget& target) {
  std::vector<std::string> prefixes{std::string(target.root())};
  auto add = [&](std::string p) {
    if (std::find(prefixes.begin(), prefixes.end(), p) == prefixes.end()) {
      prefixes.push_back(std::move(p));
    }
  };
  switch (target.library) {
    case Library::kTorchLike:
      add("torch");
      break;
    case Library::kTensorflowLike:
      add("tf");
      add("tensorflow");
      break;
    case Library::kGeneric:
      break;
  }
  return prefixes;
}

bool is_target_callee(std::string_view callee, const ApiTarget& target) {
  std::string_view name = target.qualified_name;
  if (callee == name) return true;
  if (target.library != Library::kTensorflowLike) return false;
  auto strip_root = [](std::string_view dotted) -> std::pair<std::string_view, std::string_view> {
    auto dot = dotted.find('.');
    if (dot == std::string_view::npos) return {dotted, {}};
    return {dotted.substr(0, dot), dotted.substr(dot)};
  };
  auto [croot, crest] = strip_root(callee);
  auto [troot, trest] = strip_root(name);
  auto tf_root = [](std::string_view r) { return r == "tf" || r == "tensorflow"; };
  return tf_root(croot) && tf_root(troot) && crest == trest;
}

}  // namespace evofuzz
