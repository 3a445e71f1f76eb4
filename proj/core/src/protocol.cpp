#include "foveate/protocol.hpp"

#include <nlohmann/json.hpp>

#include "foveate/errors.hpp"

namespace foveate {

using nlohmann::json;

std::string_view to_string(RequestKind kind) noexcept {
    switch (kind) {
        case RequestKind::ask:
            return "ask";
        case RequestKind::embed:
            return "embed";
        case RequestKind::metric:
            return "metric";
    }
    return "unknown";
}

void OracleRequest::validate() const {
    switch (kind) {
        case RequestKind::ask:
            if (!image || !question) {
                throw ProtocolError("ask request needs image and question");
            }
            break;
        case RequestKind::embed:
            if (!texts) {
                throw ProtocolError("embed request needs texts");
            }
            break;
        case RequestKind::metric:
            if (!image || !image2) {
                throw ProtocolError("metric request needs image and image2");
            }
            break;
    }
}

void OracleReply::validate_for(RequestKind kind) const {
    if (error) {
        if (answer || embeddings || distance) {
            throw ProtocolError("error reply must not carry results");
        }
        return;
    }
    switch (kind) {
        case RequestKind::ask:
            if (!answer || distance || (embeddings && embeddings->size() > 1)) {
                throw ProtocolError("ask reply needs an answer and at most one embedding");
            }
            break;
        case RequestKind::embed:
            if (!embeddings || answer || distance) {
                throw ProtocolError("embed reply needs embeddings only");
            }
            break;
        case RequestKind::metric:
            if (!distance || answer || embeddings) {
                throw ProtocolError("metric reply needs a distance only");
            }
            break;
    }
}

namespace {

json parse_object(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed message: ") + e.what());
    }
    if (!j.is_object()) {
        throw ProtocolError("message must be a JSON object");
    }
    return j;
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ProtocolError(std::string("field '") + key + "' has the wrong type");
    }
}

std::string required_id(const json& j) {
    auto id = optional_field<std::string>(j, "id");
    if (!id) {
        throw ProtocolError("message without id");
    }
    return *id;
}

}  // namespace

std::string encode(const OracleRequest& req) {
    json j;
    j["id"] = req.id;
    j["kind"] = std::string(to_string(req.kind));
    if (req.image) {
        j["image"] = *req.image;
    }
    if (req.image2) {
        j["image2"] = *req.image2;
    }
    if (req.question) {
        j["question"] = *req.question;
    }
    if (req.texts) {
        j["texts"] = *req.texts;
    }
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string encode(const OracleReply& reply) {
    json j;
    j["id"] = reply.id;
    if (reply.answer) {
        j["answer"] = *reply.answer;
    }
    if (reply.embeddings) {
        j["embeddings"] = *reply.embeddings;
    }
    if (reply.distance) {
        j["distance"] = *reply.distance;
    }
    if (reply.error) {
        j["error"] = *reply.error;
    }
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

OracleRequest decode_request(std::string_view line) {
    const json j = parse_object(line);
    OracleRequest req;
    req.id = required_id(j);
    const auto kind = optional_field<std::string>(j, "kind");
    if (!kind) {
        throw ProtocolError("request without kind");
    }
    if (*kind == "ask") {
        req.kind = RequestKind::ask;
    } else if (*kind == "embed") {
        req.kind = RequestKind::embed;
    } else if (*kind == "metric") {
        req.kind = RequestKind::metric;
    } else {
        throw ProtocolError("unknown request kind '" + *kind + "'");
    }
    req.image = optional_field<std::string>(j, "image");
    req.image2 = optional_field<std::string>(j, "image2");
    req.question = optional_field<std::string>(j, "question");
    req.texts = optional_field<std::vector<std::string>>(j, "texts");
    return req;
}

OracleReply decode_reply(std::string_view line) {
    const json j = parse_object(line);
    OracleReply reply;
    reply.id = required_id(j);
    reply.answer = optional_field<std::string>(j, "answer");
    reply.embeddings = optional_field<std::vector<std::vector<double>>>(j, "embeddings");
    reply.distance = optional_field<double>(j, "distance");
    reply.error = optional_field<std::string>(j, "error");
    return reply;
}

}  // namespace foveate
