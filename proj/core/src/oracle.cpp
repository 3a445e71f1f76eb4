#include "foveate/oracle.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <thread>

#define CPPHTTPLIB_NO_EXCEPTIONS_ON_ERROR
#include <httplib.h>

#include "foveate/errors.hpp"
#include "foveate/image_io.hpp"

namespace foveate {

double Oracle::metric(const ImageBuffer&, const ImageBuffer&) {
    throw OracleError("this oracle does not provide a metric");
}

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string encode_image(const ImageBuffer& img) {
    return base64_encode(encode_png(img));
}

ImageBuffer decode_image(const std::string& b64) {
    return decode_png(base64_decode(b64));
}

}  // namespace

EmbeddingVec hashed_embedding(const std::string& text, std::size_t dim) {
    if (dim == 0) {
        throw InvalidArgument("embedding dimension must be positive");
    }
    std::uint64_t state = fnv1a(text);
    std::vector<double> v(dim);
    for (;;) {
        for (double& x : v) {
            x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        }
        try {
            return normalize_embedding(v);
        } catch (const ZeroVector&) {
            // astronomically unlikely; draw again
        }
    }
}

RegionFidelityOracle::RegionFidelityOracle(RegionFidelityConfig cfg) : cfg_(std::move(cfg)) {
    const auto& r = cfg_.target;
    if (cfg_.reference.empty()) {
        throw InvalidArgument("region-fidelity oracle needs a reference image");
    }
    if (!(r.x0 >= 0 && r.y0 >= 0 && r.x0 < r.x1 && r.y0 < r.y1 && r.x1 <= cfg_.reference.width() &&
          r.y1 <= cfg_.reference.height())) {
        throw InvalidArgument("target rectangle must be non-empty and inside the reference image");
    }
    if (!(cfg_.tau > 0.0 && cfg_.tau < 1.0)) {
        throw InvalidArgument("tau must lie in (0, 1)");
    }
    if (cfg_.pass_answer == cfg_.fail_answer) {
        throw InvalidArgument("pass and fail answers must differ");
    }
}

double RegionFidelityOracle::region_error(const ImageBuffer& image) const {
    if (!image.same_shape(cfg_.reference)) {
        throw OracleError("image size differs from the oracle's reference");
    }
    const auto& r = cfg_.target;
    double acc = 0.0;
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            for (int c = 0; c < 3; ++c) {
                acc += std::abs(image.at(x, y, c) - cfg_.reference.at(x, y, c));
            }
        }
    }
    return acc / (3.0 * (r.x1 - r.x0) * (r.y1 - r.y0));
}

EmbeddingVec RegionFidelityOracle::embed_one(const std::string& text) const {
    if (text == cfg_.pass_answer) {
        const double v[] = {1.0, 0.0};
        return normalize_embedding(v);
    }
    if (text == cfg_.fail_answer) {
        const double v[] = {0.0, 1.0};
        return normalize_embedding(v);
    }
    return hashed_embedding(text, 2);
}

AskResult RegionFidelityOracle::ask(const ImageBuffer& image, const std::string&) {
    const std::string& answer = region_error(image) < cfg_.tau ? cfg_.pass_answer : cfg_.fail_answer;
    return {answer, embed_one(answer)};
}

std::vector<EmbeddingVec> RegionFidelityOracle::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw InvalidArgument("embed needs at least one text");
    }
    std::vector<EmbeddingVec> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed_one(t));
    }
    return out;
}

AnswerEchoOracle::AnswerEchoOracle(std::string answer, std::size_t dim) : answer_(std::move(answer)), dim_(dim) {
    if (dim_ == 0) {
        throw InvalidArgument("embedding dimension must be positive");
    }
}

AskResult AnswerEchoOracle::ask(const ImageBuffer&, const std::string&) {
    return {answer_, hashed_embedding(answer_, dim_)};
}

std::vector<EmbeddingVec> AnswerEchoOracle::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw InvalidArgument("embed needs at least one text");
    }
    std::vector<EmbeddingVec> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(hashed_embedding(t, dim_));
    }
    return out;
}

StdioTransport::StdioTransport(const std::string& command, std::chrono::milliseconds timeout) : timeout_(timeout) {
    // Writes to a dead child must fail with EPIPE instead of killing us.
    struct sigaction current {};
    if (sigaction(SIGPIPE, nullptr, &current) == 0 && current.sa_handler == SIG_DFL) {
        signal(SIGPIPE, SIG_IGN);
    }
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) {
        throw OracleUnavailable(std::string("pipe: ") + std::strerror(errno));
    }
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw OracleUnavailable(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = fork();
    if (pid < 0) {
        throw OracleUnavailable(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

StdioTransport::~StdioTransport() {
    if (to_child_ >= 0) {
        close(to_child_);
    }
    if (from_child_ >= 0) {
        close(from_child_);
    }
    if (pid_ > 0) {
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, nullptr, WNOHANG) == pid_) {
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        kill(pid_, SIGTERM);
        waitpid(pid_, nullptr, 0);
    }
}

std::string StdioTransport::roundtrip(const std::string& line) {
    std::lock_guard lock(mutex_);
    std::string msg = line;
    msg.push_back('\n');
    std::size_t written = 0;
    while (written < msg.size()) {
        const ssize_t n = write(to_child_, msg.data() + written, msg.size() - written);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw OracleUnavailable(std::string("oracle process write failed: ") + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
        const auto nl = pending_.find('\n');
        if (nl != std::string::npos) {
            std::string reply = pending_.substr(0, nl);
            pending_.erase(0, nl + 1);
            return reply;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            throw OracleUnavailable("oracle process timed out");
        }
        pollfd pfd{from_child_, POLLIN, 0};
        const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
        if (ready < 0 && errno == EINTR) {
            continue;
        }
        if (ready <= 0) {
            throw OracleUnavailable("oracle process timed out");
        }
        char buf[65536];
        const ssize_t n = read(from_child_, buf, sizeof buf);
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            throw OracleUnavailable("oracle process closed its output");
        }
        pending_.append(buf, static_cast<std::size_t>(n));
    }
}

HttpTransport::HttpTransport(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidArgument("oracle URL must look like http://host:port/path");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpTransport::roundtrip(const std::string& line) {
    httplib::Client client(scheme_host_port_);
    if (!client.is_valid()) {
        throw OracleUnavailable("unsupported oracle URL " + scheme_host_port_);
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post(path_, line, "application/json");
    if (!res) {
        throw OracleUnavailable("oracle endpoint " + scheme_host_port_ + path_ +
                                " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw OracleUnavailable("oracle endpoint returned HTTP " + std::to_string(res->status));
    }
    std::string body = res->body;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) {
        body.pop_back();
    }
    return body;
}

RemoteOracle::RemoteOracle(std::unique_ptr<Transport> transport, std::string id_prefix)
    : transport_(std::move(transport)), prefix_(std::move(id_prefix)) {
    if (!transport_) {
        throw InvalidArgument("remote oracle needs a transport");
    }
}

OracleReply RemoteOracle::call(OracleRequest req) {
    req.id = prefix_ + std::to_string(next_id_.fetch_add(1));
    req.validate();
    const OracleReply reply = decode_reply(transport_->roundtrip(encode(req)));
    if (reply.id != req.id) {
        throw ProtocolError("reply id '" + reply.id + "' does not match pending request '" + req.id + "'");
    }
    reply.validate_for(req.kind);
    if (reply.error) {
        throw OracleError("oracle reported: " + *reply.error);
    }
    return reply;
}

AskResult RemoteOracle::ask(const ImageBuffer& image, const std::string& question) {
    OracleRequest req;
    req.kind = RequestKind::ask;
    req.image = encode_image(image);
    req.question = question;
    OracleReply reply = call(std::move(req));
    if (reply.embeddings && reply.embeddings->size() == 1) {
        return {*reply.answer, normalize_embedding(reply.embeddings->front())};
    }
    auto emb = embed({*reply.answer});
    return {*reply.answer, std::move(emb.front())};
}

std::vector<EmbeddingVec> RemoteOracle::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw InvalidArgument("embed needs at least one text");
    }
    OracleRequest req;
    req.kind = RequestKind::embed;
    req.texts = texts;
    const OracleReply reply = call(std::move(req));
    if (reply.embeddings->size() != texts.size()) {
        throw ProtocolError("embed reply has " + std::to_string(reply.embeddings->size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    std::vector<EmbeddingVec> out;
    out.reserve(texts.size());
    for (const auto& v : *reply.embeddings) {
        out.push_back(normalize_embedding(v));
        if (out.back().size() != out.front().size()) {
            throw ProtocolError("embed reply mixes vector dimensions");
        }
    }
    return out;
}

double RemoteOracle::metric(const ImageBuffer& a, const ImageBuffer& b) {
    OracleRequest req;
    req.kind = RequestKind::metric;
    req.image = encode_image(a);
    req.image2 = encode_image(b);
    const double d = *call(std::move(req)).distance;
    if (!(d >= 0.0) || !std::isfinite(d)) {
        throw ProtocolError("metric reply distance must be finite and non-negative");
    }
    return d;
}

std::string serve_line(Oracle& oracle, const std::string& line) {
    OracleReply reply;
    try {
        const OracleRequest req = decode_request(line);
        reply.id = req.id;
        req.validate();
        switch (req.kind) {
            case RequestKind::ask: {
                AskResult r = oracle.ask(decode_image(*req.image), *req.question);
                const auto vals = r.embedding.values();
                reply.answer = std::move(r.answer);
                reply.embeddings = std::vector<std::vector<double>>{{vals.begin(), vals.end()}};
                break;
            }
            case RequestKind::embed: {
                std::vector<std::vector<double>> vs;
                for (const auto& e : oracle.embed(*req.texts)) {
                    vs.emplace_back(e.values().begin(), e.values().end());
                }
                reply.embeddings = std::move(vs);
                break;
            }
            case RequestKind::metric:
                reply.distance = oracle.metric(decode_image(*req.image), decode_image(*req.image2));
                break;
        }
    } catch (const std::exception& e) {
        reply.answer.reset();
        reply.embeddings.reset();
        reply.distance.reset();
        reply.error = e.what();
    }
    return encode(reply);
}

std::unique_ptr<Oracle> oracle_from_environment(const std::optional<std::string>& oracle_cmd) {
    if (oracle_cmd && !oracle_cmd->empty()) {
        return std::make_unique<RemoteOracle>(std::make_unique<StdioTransport>(*oracle_cmd));
    }
    if (const char* url = std::getenv("FOVEATE_ORACLE_URL"); url != nullptr && *url != '\0') {
        return std::make_unique<RemoteOracle>(std::make_unique<HttpTransport>(url));
    }
    return nullptr;
}

MetricPlugin oracle_metric_plugin(std::shared_ptr<Oracle> oracle) {
    auto mutex = std::make_shared<std::mutex>();
    return [oracle = std::move(oracle), mutex](const ImageBuffer& a, const ImageBuffer& b) {
        std::lock_guard lock(*mutex);
        return oracle->metric(a, b);
    };
}

}  // namespace foveate
