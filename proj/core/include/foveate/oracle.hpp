#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "foveate/image.hpp"
#include "foveate/metrics.hpp"
#include "foveate/protocol.hpp"
#include "foveate/semantic.hpp"

namespace foveate {

struct AskResult {
    std::string answer;
    EmbeddingVec embedding;
};

/// The black-box question-answering model plus its answer encoder.
class Oracle {
public:
    virtual ~Oracle() = default;

    /// Throws OracleUnavailable (transport) or OracleError (remote-reported).
    virtual AskResult ask(const ImageBuffer& image, const std::string& question) = 0;
    /// One unit-norm vector per text. Throws InvalidArgument on an empty list.
    virtual std::vector<EmbeddingVec> embed(const std::vector<std::string>& texts) = 0;
    /// Optional plugin distance; the default reports the capability as missing.
    virtual double metric(const ImageBuffer& a, const ImageBuffer& b);
};

/// Pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
};

struct RegionFidelityConfig {
    ImageBuffer reference;
    PixelRect target;
    double tau = 0.05;
    std::string pass_answer = "A";
    std::string fail_answer = "B";
};

/// Answers `pass_answer` when the mean absolute error against the reference inside
/// the target rectangle is below tau, otherwise `fail_answer`. Embeddings are
/// two-dimensional: pass -> (1, 0), fail -> (0, 1), other texts hash to the unit circle.
class RegionFidelityOracle final : public Oracle {
public:
    explicit RegionFidelityOracle(RegionFidelityConfig cfg);

    AskResult ask(const ImageBuffer& image, const std::string& question) override;
    std::vector<EmbeddingVec> embed(const std::vector<std::string>& texts) override;

    [[nodiscard]] double region_error(const ImageBuffer& image) const;
    [[nodiscard]] const RegionFidelityConfig& config() const noexcept { return cfg_; }

private:
    [[nodiscard]] EmbeddingVec embed_one(const std::string& text) const;
    RegionFidelityConfig cfg_;
};

/// Returns the same answer whatever the image; texts embed by hash into `dim` dimensions.
class AnswerEchoOracle final : public Oracle {
public:
    explicit AnswerEchoOracle(std::string answer, std::size_t dim = 8);

    AskResult ask(const ImageBuffer& image, const std::string& question) override;
    std::vector<EmbeddingVec> embed(const std::vector<std::string>& texts) override;

private:
    std::string answer_;
    std::size_t dim_;
};

/// Deterministic unit vector derived from the text bytes.
[[nodiscard]] EmbeddingVec hashed_embedding(const std::string& text, std::size_t dim);

/// Carries one encoded request line and returns the reply line.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string roundtrip(const std::string& line) = 0;
};

/// Child process speaking the protocol on stdin/stdout; calls are serialised.
class StdioTransport final : public Transport {
public:
    explicit StdioTransport(const std::string& command,
                            std::chrono::milliseconds timeout = std::chrono::milliseconds(120000));
    ~StdioTransport() override;
    StdioTransport(const StdioTransport&) = delete;
    StdioTransport& operator=(const StdioTransport&) = delete;

    std::string roundtrip(const std::string& line) override;

private:
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string pending_;
    std::chrono::milliseconds timeout_;
};

/// One HTTP POST per message; safe to call from several threads at once.
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::string url, std::chrono::milliseconds timeout = std::chrono::milliseconds(120000));
    std::string roundtrip(const std::string& line) override;

private:
    std::string scheme_host_port_;
    std::string path_;
    std::chrono::milliseconds timeout_;
};

/// Oracle reached through a Transport. Request ids are "<prefix><counter>".
class RemoteOracle final : public Oracle {
public:
    explicit RemoteOracle(std::unique_ptr<Transport> transport, std::string id_prefix = "req-");

    AskResult ask(const ImageBuffer& image, const std::string& question) override;
    std::vector<EmbeddingVec> embed(const std::vector<std::string>& texts) override;
    double metric(const ImageBuffer& a, const ImageBuffer& b) override;

private:
    OracleReply call(OracleRequest req);

    std::unique_ptr<Transport> transport_;
    std::string prefix_;
    std::atomic<std::uint64_t> next_id_{1};
};

/// Server side: handle one request line with `oracle`, producing one reply line.
/// Never throws for request-level problems; they become error replies.
[[nodiscard]] std::string serve_line(Oracle& oracle, const std::string& line);

/// --oracle-cmd wins; otherwise FOVEATE_ORACLE_URL; otherwise nullptr.
[[nodiscard]] std::unique_ptr<Oracle> oracle_from_environment(const std::optional<std::string>& oracle_cmd);

/// Adapts an oracle's metric endpoint to the perceptual-loss plugin slot.
/// Calls are serialised through an internal mutex.
[[nodiscard]] MetricPlugin oracle_metric_plugin(std::shared_ptr<Oracle> oracle);

}  // namespace foveate
