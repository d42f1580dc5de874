#include "nac/pdp/audit.hpp"

#include "nac/model/errors.hpp"
#include "nac/model/json_util.hpp"

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <istream>

#include <fmt/format.h>

namespace nac::pdp {

JsonlAuditSink::JsonlAuditSink(const std::string& path)
{
    file_ = std::fopen(path.c_str(), "a");
    if (!file_) {
        throw ConfigError(fmt::format("cannot open audit log {}: {}", path, std::strerror(errno)));
    }
}

JsonlAuditSink::~JsonlAuditSink()
{
    if (file_) std::fclose(file_);
}

void JsonlAuditSink::append(const std::vector<model::EventEnvelope>& records)
{
    std::lock_guard lock(mu_);
    for (const auto& env : records) {
        const auto line = nlohmann::json(env).dump() + "\n";
        if (std::fwrite(line.data(), 1, line.size(), file_) != line.size()) {
            throw Error(fmt::format("audit write failed: {}", std::strerror(errno)));
        }
    }
    std::fflush(file_);
}

std::vector<model::EventEnvelope> read_audit(std::istream& in)
{
    std::vector<model::EventEnvelope> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(model::parse_json(line).get<model::EventEnvelope>());
        } catch (const std::exception& e) {
            throw InvalidArgument(fmt::format("audit line {}: {}", lineno, e.what()));
        }
    }
    check_gap_free(out);
    return out;
}

std::vector<model::EventEnvelope> read_audit_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw NotFound(fmt::format("cannot read audit log {}", path));
    }
    return read_audit(in);
}

void check_gap_free(const std::vector<model::EventEnvelope>& records)
{
    std::array<std::uint64_t, 8> last{};
    for (const auto& env : records) {
        auto& prev = last[static_cast<int>(env.source) - 1];
        if (env.seq != prev + 1) {
            throw IntegrityError(fmt::format("source {} jumps from seq {} to {}", model::to_string(env.source), prev,
                                             env.seq));
        }
        prev = env.seq;
    }
}

} // namespace nac::pdp
