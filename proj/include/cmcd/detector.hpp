#pragma once

// Real-time streaming inference: consume a 100 Hz sensor stream (replayed
// from file or generated live), emit one collision-probability datagram per
// frame over UDP, and append a detection log. The UDP wire is the handoff
// boundary to whatever consumes the probabilities (e.g. an audio tool).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <deque>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include "cmcd/gbt.hpp"
#include "cmcd/sim.hpp"
#include "cmcd/types.hpp"
#include "cmcd/util.hpp"

namespace cmcd::detect {

// ---- wire format ----
// ASCII, one line per frame, <= 64 bytes:
//   CMCD1 <timestamp_ms:int> <probability:6dp> <label:0|1>\n

inline std::string encode_datagram(double timestamp_s, double probability, int label) {
    char buf[64];
    const long long ms = std::llround(timestamp_s * 1000.0);
    std::snprintf(buf, sizeof(buf), "CMCD1 %lld %.6f %d\n", ms, probability, label);
    return std::string(buf);
}

struct Decoded {
    double timestamp_s = 0.0;
    double probability = 0.0;
    int label = 0;
};

inline std::optional<Decoded> decode_datagram(std::string_view payload) {
    long long ms = 0;
    double p = 0.0;
    int label = 0;
    char tag[8] = {};
    if (std::sscanf(std::string(payload).c_str(), "%7s %lld %lf %d", tag, &ms, &p, &label) != 4)
        return std::nullopt;
    if (std::string_view(tag) != "CMCD1") return std::nullopt;
    return Decoded{double(ms) / 1000.0, p, label};
}

// ---- UDP sink ----

class UdpSender {
public:
    UdpSender(const std::string& host, int port) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_DGRAM;
        addrinfo* res = nullptr;
        if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
            throw std::runtime_error("cannot resolve UDP sink " + host + ":" + std::to_string(port));
        fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        if (fd_ >= 0) {
            addr_len_ = res->ai_addrlen;
            std::memcpy(&addr_, res->ai_addr, res->ai_addrlen);
        }
        freeaddrinfo(res);
        if (fd_ < 0) throw std::runtime_error("cannot open UDP socket");
    }

    UdpSender(const UdpSender&) = delete;
    UdpSender& operator=(const UdpSender&) = delete;
    ~UdpSender() {
        if (fd_ >= 0) ::close(fd_);
    }

    bool send(std::string_view payload) {
        const ssize_t n = ::sendto(fd_, payload.data(), payload.size(), 0,
                                   reinterpret_cast<const sockaddr*>(&addr_), addr_len_);
        return n == ssize_t(payload.size());
    }

private:
    int fd_ = -1;
    sockaddr_storage addr_{};
    socklen_t addr_len_ = 0;
};

// ---- bounded SPSC queue (live mode backpressure) ----
// Overflow drops the OLDEST frame: stale collision evidence is worthless.

template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

    // Returns the number of frames dropped to make room (0 or 1).
    std::size_t push(T item) {
        std::size_t dropped = 0;
        {
            std::lock_guard<std::mutex> lock(mut_);
            if (queue_.size() >= capacity_) {
                queue_.pop_front();
                dropped = 1;
            }
            queue_.push_back(std::move(item));
        }
        cv_.notify_one();
        return dropped;
    }

    bool pop(T& out) {
        std::unique_lock<std::mutex> lock(mut_);
        cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
        if (queue_.empty()) return false;
        out = std::move(queue_.front());
        queue_.pop_front();
        return true;
    }

    void close() {
        {
            std::lock_guard<std::mutex> lock(mut_);
            closed_ = true;
        }
        cv_.notify_all();
    }

private:
    std::deque<T> queue_;
    std::size_t capacity_;
    bool closed_ = false;
    std::mutex mut_;
    std::condition_variable cv_;
};

// ---- stream configuration / run ----

struct StreamConfig {
    gbt::GbtModel model;
    // exactly one source: replay frames, or a live scenario
    std::vector<SensorFrame> replay;
    std::optional<sim::Scenario> live;
    std::vector<ContactTruth> truth;  // optional, joined into the log by index

    std::string host;  // empty = no UDP emission
    int port = 0;
    double decision_threshold = 0.5;
    double rate_hz = 100.0;
    std::size_t queue_capacity = 64;
    bool pace_replay = false;  // sleep to real time in replay mode

    void validate() const {
        if (!(rate_hz > 0.0)) throw std::invalid_argument("rate must be > 0");
        if (decision_threshold < 0.0 || decision_threshold > 1.0)
            throw std::invalid_argument("decision threshold must be in [0, 1]");
        if (replay.empty() == !live.has_value())
            throw std::invalid_argument("exactly one of replay/live source required");
    }
};

struct DetectorStats {
    std::size_t frames = 0;
    std::size_t positives = 0;
    std::size_t dropped = 0;        // live mode only
    std::size_t send_failures = 0;
    double p50_latency_ms = 0.0;    // inference + encode
    double p99_latency_ms = 0.0;
    double max_latency_ms = 0.0;
    double wall_seconds = 0.0;
    std::string log;                // CSV: timestamp,probability,label[,truth]
};

namespace detail {

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t i = std::size_t(q * double(v.size() - 1) + 0.5);
    return v[std::min(i, v.size() - 1)];
}

}  // namespace detail

// Processes every frame of the stream: probability, datagram, log row.
// Replay mode never drops frames; live mode counts queue overflow drops.
// An unreachable sink is counted and skipped, never fatal.
inline DetectorStats run_detector(const StreamConfig& cfg) {
    cfg.validate();
    std::optional<UdpSender> sink;
    if (!cfg.host.empty()) sink.emplace(cfg.host, cfg.port);

    DetectorStats stats;
    stats.log = "timestamp,probability,label";
    const bool with_truth = !cfg.truth.empty();
    if (with_truth) stats.log += ",truth";
    stats.log += '\n';

    std::vector<double> latencies_ms;
    const auto wall0 = std::chrono::steady_clock::now();

    auto process = [&](const SensorFrame& frame, std::size_t index) {
        const auto t0 = std::chrono::steady_clock::now();
        gbt::DetectionOutput out;
        out.timestamp = frame.timestamp;
        out.probability = cfg.model.proba(frame.values);
        out.predicted_label = out.probability >= cfg.decision_threshold ? 1 : 0;
        const std::string datagram =
            encode_datagram(out.timestamp, out.probability, out.predicted_label);
        const auto t1 = std::chrono::steady_clock::now();
        latencies_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

        if (sink && !sink->send(datagram)) ++stats.send_failures;

        stats.log += fmt_double(out.timestamp) + "," + fmt_double(out.probability) + "," +
                     std::to_string(out.predicted_label);
        if (with_truth) {
            const bool truth = index < cfg.truth.size() && cfg.truth[index].in_contact;
            stats.log += truth ? ",1" : ",0";
        }
        stats.log += '\n';
        ++stats.frames;
        stats.positives += std::size_t(out.predicted_label);
    };

    if (!cfg.replay.empty()) {
        // model/stream dimension checked up front: abort before streaming
        if (int(cfg.replay.front().values.size()) != cfg.model.n_features)
            throw std::invalid_argument("model/stream feature dimension mismatch");
        const auto start = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < cfg.replay.size(); ++i) {
            if (cfg.pace_replay) {
                const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                             std::chrono::duration<double>(double(i) / cfg.rate_hz));
                std::this_thread::sleep_until(due);
            }
            process(cfg.replay[i], i);
        }
    } else {
        // live: paced producer (simulator) -> bounded queue -> inference
        BoundedQueue<SensorFrame> queue(cfg.queue_capacity);
        std::atomic<std::size_t> dropped{0};
        std::exception_ptr producer_error;

        std::thread producer([&] {
            try {
                const auto start = std::chrono::steady_clock::now();
                std::size_t k = 0;
                sim::ScenarioSinks sinks;
                sinks.on_sensor = [&](const SensorFrame& f) {
                    const auto due =
                        start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(double(k++) / cfg.rate_hz));
                    std::this_thread::sleep_until(due);
                    dropped += queue.push(f);
                };
                sim::run_scenario(*cfg.live, sinks);
            } catch (...) {
                producer_error = std::current_exception();
            }
            queue.close();
        });

        bool checked = false;
        SensorFrame frame;
        std::size_t index = 0;
        while (queue.pop(frame)) {
            if (!checked) {
                if (int(frame.values.size()) != cfg.model.n_features) {
                    queue.close();
                    producer.join();
                    throw std::invalid_argument("model/stream feature dimension mismatch");
                }
                checked = true;
            }
            process(frame, index++);
        }
        producer.join();
        if (producer_error) std::rethrow_exception(producer_error);
        stats.dropped = dropped;
    }

    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    stats.p50_latency_ms = detail::percentile(latencies_ms, 0.50);
    stats.p99_latency_ms = detail::percentile(latencies_ms, 0.99);
    for (double l : latencies_ms) stats.max_latency_ms = std::max(stats.max_latency_ms, l);
    return stats;
}

}  // namespace cmcd::detect
