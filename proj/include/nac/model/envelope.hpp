#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "nac/model/clock.hpp"

namespace nac::model {

/// Source tags of the shared event channel: the seven OSI layers plus the
/// posture-assessment layer stacked on top of them.
enum class LayerTag : int {
    physical = 1,
    data_link = 2,
    network = 3,
    transport = 4,
    session = 5,
    presentation = 6,
    application = 7,
    nac_posture = 8,
};

inline constexpr std::array<LayerTag, 8> kAllLayerTags{
    LayerTag::physical, LayerTag::data_link, LayerTag::network, LayerTag::transport,
    LayerTag::session, LayerTag::presentation, LayerTag::application, LayerTag::nac_posture,
};

std::string_view to_string(LayerTag tag);
std::optional<LayerTag> parse_layer_tag(std::string_view text);

struct EventEnvelope {
    std::uint64_t seq = 0;
    Millis ts = 0;
    LayerTag source = LayerTag::nac_posture;
    std::string kind;
    nlohmann::json payload;

    bool operator==(const EventEnvelope&) const = default;
};

/// Keys: seq, ts, source, kind, payload. Unknown keys are ignored on input.
void to_json(nlohmann::json& j, const EventEnvelope& env);
void from_json(const nlohmann::json& j, EventEnvelope& env);

/// Hands out per-source sequence numbers. Counters start at 1; 0 means
/// "nothing seen from this source yet".
class EnvelopeSequencer {
public:
    EventEnvelope next(LayerTag source, std::string kind, nlohmann::json payload, const Clock& clock);
    /// Throws InvalidArgument for a tag outside the eight layer names.
    EventEnvelope next(std::string_view source, std::string kind, nlohmann::json payload, const Clock& clock);

    std::uint64_t last(LayerTag source) const;
    std::array<std::uint64_t, 8> snapshot() const;
    void restore(const std::array<std::uint64_t, 8>& counters);

private:
    mutable std::mutex mu_;
    std::array<std::uint64_t, 8> counters_{};
};

} // namespace nac::model
