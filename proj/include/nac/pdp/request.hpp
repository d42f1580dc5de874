#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "nac/identity/directory.hpp"
#include "nac/model/address.hpp"
#include "nac/model/identity_types.hpp"
#include "nac/posture/posture.hpp"

namespace nac::pdp {

struct AccessRequest {
    /// Absent credential means mac-only with the device's MAC.
    identity::Credential credential;
    model::DeviceDescriptor device;
    model::NetworkLocation location;
    std::optional<posture::PostureReport> posture;
    /// Address the endpoint will use; allocated from the pool when absent.
    std::optional<model::Ipv4Address> ip;
    std::optional<model::Millis> requested_at;

    /// Credential consistent, posture report (if any) well formed and for
    /// the same device.
    void validate() const;
};

/// The secret is written as "sha256:<hex>" so the record never carries it.
nlohmann::json redacted_json(const AccessRequest& req);
void to_json(nlohmann::json& j, const AccessRequest& req);
void from_json(const nlohmann::json& j, AccessRequest& req);

/// Hash over the redacted request; equal digests mean equal decision inputs.
std::string inputs_digest(const AccessRequest& req);

} // namespace nac::pdp
