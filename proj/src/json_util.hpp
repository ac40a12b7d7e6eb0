#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "twill/error.hpp"

namespace twill::detail {

using json = nlohmann::json;

inline json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

inline const json& require(const json& obj, const char* key, std::string_view what) {
    if (!obj.is_object() || !obj.contains(key))
        throw ParseError(std::string(what) + ": missing field '" + key + "'");
    return obj.at(key);
}

template <typename T>
T get_as(const json& value, const char* key, std::string_view what) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string(what) + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T field(const json& obj, const char* key, std::string_view what) {
    return get_as<T>(require(obj, key, what), key, what);
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, std::string_view what) {
    if (!obj.contains(key) || obj.at(key).is_null())
        return fallback;
    return get_as<T>(obj.at(key), key, what);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace twill::detail
