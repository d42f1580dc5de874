#include "nac/model/envelope.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <fmt/format.h>

namespace nac::model {

namespace {

constexpr std::array<std::string_view, 8> kLayerNames{
    "physical", "data-link", "network", "transport", "session", "presentation", "application", "nac-posture",
};

std::size_t index_of(LayerTag tag) { return static_cast<std::size_t>(tag) - 1; }

} // namespace

std::string_view to_string(LayerTag tag) { return kLayerNames.at(index_of(tag)); }

std::optional<LayerTag> parse_layer_tag(std::string_view text)
{
    for (std::size_t i = 0; i < kLayerNames.size(); ++i) {
        if (kLayerNames[i] == text) {
            return kAllLayerTags[i];
        }
    }
    return std::nullopt;
}

void to_json(nlohmann::json& j, const EventEnvelope& env)
{
    j = nlohmann::json{
        {"seq", env.seq},
        {"ts", env.ts},
        {"source", to_string(env.source)},
        {"kind", env.kind},
        {"payload", env.payload},
    };
}

void from_json(const nlohmann::json& j, EventEnvelope& env)
{
    env.seq = required<std::uint64_t>(j, "seq");
    env.ts = required<Millis>(j, "ts");
    const auto source = required<std::string>(j, "source");
    const auto tag = parse_layer_tag(source);
    if (!tag) {
        throw InvalidArgument(fmt::format("unknown source tag '{}'", source));
    }
    env.source = *tag;
    env.kind = required<std::string>(j, "kind");
    env.payload = j.contains("payload") ? j.at("payload") : nlohmann::json();
}

EventEnvelope EnvelopeSequencer::next(LayerTag source, std::string kind, nlohmann::json payload, const Clock& clock)
{
    std::lock_guard lock(mu_);
    EventEnvelope env;
    env.seq = ++counters_.at(index_of(source));
    env.ts = clock.now();
    env.source = source;
    env.kind = std::move(kind);
    env.payload = std::move(payload);
    return env;
}

EventEnvelope EnvelopeSequencer::next(std::string_view source, std::string kind, nlohmann::json payload,
                                      const Clock& clock)
{
    const auto tag = parse_layer_tag(source);
    if (!tag) {
        throw InvalidArgument(fmt::format("unknown source tag '{}'", source));
    }
    return next(*tag, std::move(kind), std::move(payload), clock);
}

std::uint64_t EnvelopeSequencer::last(LayerTag source) const
{
    std::lock_guard lock(mu_);
    return counters_.at(index_of(source));
}

std::array<std::uint64_t, 8> EnvelopeSequencer::snapshot() const
{
    std::lock_guard lock(mu_);
    return counters_;
}

void EnvelopeSequencer::restore(const std::array<std::uint64_t, 8>& counters)
{
    std::lock_guard lock(mu_);
    counters_ = counters;
}

} // namespace nac::model
