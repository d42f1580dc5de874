#include "nac/pdp/request.hpp"

#include "nac/model/digest.hpp"
#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <fmt/format.h>

namespace nac::pdp {

void AccessRequest::validate() const
{
    credential.validate();
    if (posture) {
        posture->validate();
        if (posture->device.mac != device.mac) {
            throw InvalidArgument("posture report is for a different device");
        }
    }
}

void to_json(nlohmann::json& j, const AccessRequest& req)
{
    j = nlohmann::json{{"credential", req.credential}, {"device", req.device}, {"location", req.location}};
    if (req.posture) j["posture"] = *req.posture;
    if (req.ip) j["ip"] = *req.ip;
    if (req.requested_at) j["requested_at"] = *req.requested_at;
}

nlohmann::json redacted_json(const AccessRequest& req)
{
    nlohmann::json j = req;
    if (req.credential.secret) {
        j["credential"]["secret"] = "sha256:" + model::sha256_hex(*req.credential.secret);
    }
    return j;
}

void from_json(const nlohmann::json& j, AccessRequest& req)
{
    using model::optional_field;
    using model::required;
    req.device = required<model::DeviceDescriptor>(j, "device");
    req.location = required<model::NetworkLocation>(j, "location");
    if (const auto cred = optional_field<identity::Credential>(j, "credential")) {
        req.credential = *cred;
    } else {
        req.credential = identity::Credential::mac_only(req.device.mac);
    }
    req.posture = optional_field<posture::PostureReport>(j, "posture");
    req.ip = optional_field<model::Ipv4Address>(j, "ip");
    req.requested_at = optional_field<model::Millis>(j, "requested_at");
    req.validate();
}

std::string inputs_digest(const AccessRequest& req)
{
    return model::sha256_hex(redacted_json(req).dump());
}

} // namespace nac::pdp
