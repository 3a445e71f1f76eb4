#include <string>

#include <gtest/gtest.h>

#include "foveate/errors.hpp"
#include "foveate/optimizer.hpp"
#include "foveate/protocol.hpp"

namespace foveate {
namespace {

std::string random_text(Rng& rng) {
    static const std::string kAlphabet =
        "abcXYZ 019 \"\\/\n\t{}[]:,\xc3\xa9\xe2\x82\xac";  // includes multi-byte é and €
    const auto len = static_cast<std::size_t>(rng.uniform() * 24);
    std::string s;
    for (std::size_t i = 0; i < len; ++i) {
        const auto k = static_cast<std::size_t>(rng.uniform() * (kAlphabet.size() - 5));
        s += kAlphabet[k];
    }
    if (rng.uniform() < 0.2) {
        s += "\xc3\xa9";
    }
    return s;
}

OracleRequest random_request(Rng& rng, int i) {
    OracleRequest r;
    r.id = "r" + std::to_string(i) + random_text(rng);
    r.kind = static_cast<RequestKind>(static_cast<int>(rng.uniform() * 3));
    if (rng.uniform() < 0.7) r.image = random_text(rng);
    if (rng.uniform() < 0.5) r.image2 = random_text(rng);
    if (rng.uniform() < 0.6) r.question = random_text(rng);
    if (rng.uniform() < 0.5) {
        r.texts.emplace();
        const int n = static_cast<int>(rng.uniform() * 4);
        for (int k = 0; k < n; ++k) r.texts->push_back(random_text(rng));
    }
    return r;
}

OracleReply random_reply(Rng& rng, int i) {
    OracleReply r;
    r.id = "p" + std::to_string(i);
    if (rng.uniform() < 0.5) r.answer = random_text(rng);
    if (rng.uniform() < 0.5) {
        r.embeddings.emplace();
        const int n = static_cast<int>(rng.uniform() * 3);
        for (int k = 0; k < n; ++k) {
            std::vector<double> v;
            for (int d = 0; d < 5; ++d) v.push_back((rng.uniform() - 0.5) * std::pow(10.0, d * 3 - 6));
            r.embeddings->push_back(v);
        }
    }
    if (rng.uniform() < 0.3) r.distance = rng.uniform() * 7.0;
    if (rng.uniform() < 0.2) r.error = random_text(rng);
    return r;
}

bool keys_sorted(const std::string& line) {
    // Top-level keys appear as "key": at depth one.
    std::vector<std::string> keys;
    int depth = 0;
    bool in_str = false;
    std::string cur;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_str) {
            if (ch == '\\') {
                cur += ch;
                cur += line[++i];
            } else if (ch == '"') {
                in_str = false;
                if (depth == 1 && i + 1 < line.size() && line[i + 1] == ':') keys.push_back(cur);
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            in_str = true;
            cur.clear();
        } else if (ch == '{' || ch == '[') {
            ++depth;
        } else if (ch == '}' || ch == ']') {
            --depth;
        }
    }
    return std::is_sorted(keys.begin(), keys.end());
}

TEST(Protocol, RequestRoundTripFuzz) {
    Rng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const OracleRequest r = random_request(rng, i);
        const std::string line = encode(r);
        ASSERT_EQ(line.find('\n'), std::string::npos);
        ASSERT_TRUE(keys_sorted(line)) << line;
        ASSERT_EQ(decode_request(line), r) << line;
    }
}

TEST(Protocol, ReplyRoundTripFuzz) {
    Rng rng(2025);
    for (int i = 0; i < 10000; ++i) {
        const OracleReply r = random_reply(rng, i);
        const std::string line = encode(r);
        ASSERT_EQ(line.find('\n'), std::string::npos);
        ASSERT_TRUE(keys_sorted(line)) << line;
        ASSERT_EQ(decode_reply(line), r) << line;
    }
}

TEST(Protocol, AbsentOptionalsAreOmitted) {
    OracleRequest r;
    r.id = "x";
    r.kind = RequestKind::embed;
    r.texts = std::vector<std::string>{"a"};
    EXPECT_EQ(encode(r), R"({"id":"x","kind":"embed","texts":["a"]})");
    OracleReply p;
    p.id = "x";
    p.distance = 0.5;
    EXPECT_EQ(encode(p), R"({"distance":0.5,"id":"x"})");
}

TEST(Protocol, MalformedInputs) {
    for (const char* bad : {"", "{", "[]", "42", R"({"kind":"ask"})", R"({"id":"1"})", R"({"id":"1","kind":"draw"})",
                            R"({"id":7,"kind":"ask"})", R"({"id":"1","kind":"embed","texts":"a"})",
                            R"({"id":"1","kind":"ask","question":[1]})"}) {
        EXPECT_THROW((void)decode_request(bad), ProtocolError) << bad;
    }
    for (const char* bad : {"nope", R"({"answer":"A"})", R"({"id":"1","distance":"far"})",
                            R"({"id":"1","embeddings":[["x"]]})"}) {
        EXPECT_THROW((void)decode_reply(bad), ProtocolError) << bad;
    }
}

TEST(Protocol, RequestValidation) {
    OracleRequest r;
    r.id = "1";
    r.kind = RequestKind::ask;
    r.image = "png";
    EXPECT_THROW(r.validate(), ProtocolError);
    r.question = "q";
    EXPECT_NO_THROW(r.validate());
    r.kind = RequestKind::metric;
    EXPECT_THROW(r.validate(), ProtocolError);
    r.image2 = "png2";
    EXPECT_NO_THROW(r.validate());
    r.kind = RequestKind::embed;
    EXPECT_THROW(r.validate(), ProtocolError);
}

TEST(Protocol, ReplyValidation) {
    OracleReply ok_ask{"1", "A", std::vector<std::vector<double>>{{1.0, 0.0}}, std::nullopt, std::nullopt};
    EXPECT_NO_THROW(ok_ask.validate_for(RequestKind::ask));
    OracleReply two = ok_ask;
    two.embeddings->push_back({0.0, 1.0});
    EXPECT_THROW(two.validate_for(RequestKind::ask), ProtocolError);
    EXPECT_THROW(ok_ask.validate_for(RequestKind::embed), ProtocolError);
    OracleReply err{"1", std::nullopt, std::nullopt, std::nullopt, "boom"};
    for (RequestKind k : {RequestKind::ask, RequestKind::embed, RequestKind::metric}) {
        EXPECT_NO_THROW(err.validate_for(k));
    }
    err.answer = "A";
    EXPECT_THROW(err.validate_for(RequestKind::ask), ProtocolError);
    OracleReply m{"1", std::nullopt, std::nullopt, 0.2, std::nullopt};
    EXPECT_NO_THROW(m.validate_for(RequestKind::metric));
    EXPECT_THROW(m.validate_for(RequestKind::ask), ProtocolError);
}

}  // namespace
}  // namespace foveate
