#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "json.hpp"
#include "nac/model/errors.hpp"

namespace nac::model {

/// Reads a required member, turning type and presence errors into
/// InvalidArgument naming the field.
template <typename T>
T required(const nlohmann::json& j, std::string_view field)
{
    if (!j.is_object()) {
        throw InvalidArgument(fmt::format("expected an object holding '{}'", field));
    }
    const auto it = j.find(field);
    if (it == j.end() || it->is_null()) {
        throw InvalidArgument(fmt::format("missing field '{}'", field));
    }
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("field '{}': {}", field, e.what()));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(fmt::format("field '{}': {}", field, e.what()));
    }
}

template <typename T>
std::optional<T> optional_field(const nlohmann::json& j, std::string_view field)
{
    if (!j.is_object()) {
        throw InvalidArgument(fmt::format("expected an object holding '{}'", field));
    }
    const auto it = j.find(field);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(fmt::format("field '{}': {}", field, e.what()));
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(fmt::format("field '{}': {}", field, e.what()));
    }
}

/// Parses a JSON document, mapping syntax errors to InvalidArgument.
nlohmann::json parse_json(std::string_view text);

} // namespace nac::model
