#pragma once

#include <string>

#include <json.hpp>

namespace hatedet {

/// Serializes with invalid UTF-8 replaced by U+FFFD instead of throwing; OCR
/// and provider text is not guaranteed to be valid UTF-8.
inline std::string dump_json(const nlohmann::json& j, int indent = -1) {
    return j.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace hatedet
