#pragma once

// Shared helpers of the JSON readers and writers. Private to the library.

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "stablehh/market.hpp"

namespace stablehh::io::detail {

// Insertion-ordered so that files list fields in a readable order.
using Json = nlohmann::ordered_json;

Json optional_number(const std::optional<double>& v);
std::optional<double> read_optional(const Json& j, const char* key);
std::optional<std::string> read_optional_string(const Json& j, const char* key);

/// Parses a {"schema_version": 1, "<collection>": [...]} document.
Json parse_document(std::string_view text, const char* collection);
std::string dump_document(const char* collection, Json items);

Json key_json(const OptionKey& key);
OptionKey key_from(const Json& j);
Json model_json(ModelKind model);
ModelKind model_from(const Json& j);

}  // namespace stablehh::io::detail
