#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evofuzz {

enum class Library { kTorchLike, kTensorflowLike, kGeneric };

std::string_view to_string(Library library);
Library library_from_string(std::string_view text);

// Guesses the library family from the root of a dotted API name
// ("torch.mm" -> torch-like, "tf.nn.conv2d" -> tensorflow-like).
Library infer_library(std::string_view qualified_name);

class InvalidTarget : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ApiTarget {
  Library library = Library::kGeneric;
  std::string qualified_name;
  std::string signature;

  // Validates the name/signature invariants; throws InvalidTarget.
  static ApiTarget make(Library library, std::string qualified_name,
                        std::string signature = {});
  static ApiTarget make(std::string qualified_name, std::string signature = {});

  // First dotted component, e.g. "tf" for "tf.nn.conv2d".
  std::string_view root() const;
  // Final dotted component, e.g. "conv2d".
  std::string_view leaf() const;

  bool operator==(const ApiTarget&) const = default;
};

// Dotted prefixes that identify calls into the target's library. Always
// includes the root of the qualified name.
std::vector<std::string> library_prefixes(const ApiTarget& target);

// True when a dotted callee names the target API. For tensorflow-like
// targets the "tf" and "tensorflow" roots are interchangeable.
bool is_target_callee(std::string_view callee, const ApiTarget& target);

}  // namespace evofuzz
