#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace tablegraph {

/// All file formats use ordered JSON so emitted artifacts are byte-stable.
using Json = nlohmann::ordered_json;

/// Text identifier of an object/node, e.g. "red bowl 1". Unique per scene.
using NodeId = std::string;

/// Attribute key -> value, keys lowercase snake_case (e.g. color, type,
/// is_open). std::map keeps serialization order deterministic.
using AttributeMap = std::map<std::string, std::string>;

enum class AmbiguityTag { clear, multiplicity, absence, underspecified, occluded };

inline const char* to_string(AmbiguityTag tag) {
    switch (tag) {
        case AmbiguityTag::clear: return "clear";
        case AmbiguityTag::multiplicity: return "multiplicity";
        case AmbiguityTag::absence: return "absence";
        case AmbiguityTag::underspecified: return "underspecified";
        case AmbiguityTag::occluded: return "occluded";
    }
    return "clear";
}

inline std::optional<AmbiguityTag> ambiguity_from_string(std::string_view s) {
    if (s == "clear") return AmbiguityTag::clear;
    if (s == "multiplicity") return AmbiguityTag::multiplicity;
    if (s == "absence") return AmbiguityTag::absence;
    if (s == "underspecified") return AmbiguityTag::underspecified;
    if (s == "occluded") return AmbiguityTag::occluded;
    return std::nullopt;
}

struct GridCell {
    int col = 0;
    int row = 0;
    auto operator<=>(const GridCell&) const = default;
};

/// ASCII case-fold used for every attribute/id comparison.
inline std::string fold_case(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

/// Raised when a world or graph cannot be built from its inputs.
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a file does not match its schema; message carries the JSON
/// path of the offending element.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace tablegraph
