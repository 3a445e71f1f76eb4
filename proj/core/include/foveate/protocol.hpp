#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace foveate {

enum class RequestKind { ask, embed, metric };

[[nodiscard]] std::string_view to_string(RequestKind kind) noexcept;

/// One line of the oracle wire protocol. Images travel as base64 PNG.
struct OracleRequest {
    std::string id;
    RequestKind kind = RequestKind::ask;
    std::optional<std::string> image;
    std::optional<std::string> image2;
    std::optional<std::string> question;
    std::optional<std::vector<std::string>> texts;

    /// ask needs image + question, embed needs texts, metric needs image + image2.
    void validate() const;
    friend bool operator==(const OracleRequest&, const OracleRequest&) = default;
};

struct OracleReply {
    std::string id;
    std::optional<std::string> answer;
    std::optional<std::vector<std::vector<double>>> embeddings;
    std::optional<double> distance;
    std::optional<std::string> error;

    /// Checks the populated fields against the request kind: an error reply
    /// carries only `error`; ask carries `answer` plus at most one embedding;
    /// embed carries `embeddings`; metric carries `distance`.
    void validate_for(RequestKind kind) const;
    friend bool operator==(const OracleReply&, const OracleReply&) = default;
};

/// Single-line JSON with sorted keys; absent optionals are omitted.
[[nodiscard]] std::string encode(const OracleRequest& req);
[[nodiscard]] std::string encode(const OracleReply& reply);

/// Throw ProtocolError on malformed JSON, wrong types or unknown kinds.
[[nodiscard]] OracleRequest decode_request(std::string_view line);
[[nodiscard]] OracleReply decode_reply(std::string_view line);

}  // namespace foveate
