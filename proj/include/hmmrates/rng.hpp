#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace hmmrates {

// Counter-based random streams (Philox4x32-10). A stream is addressed by a
// 64-bit key (the run seed) and a 64-bit stream id; draws within a stream are
// indexed by an internal counter. Identical (seed, id) pairs always replay the
// same sequence, so work can be split across threads in any way.
class Philox4x32 {
public:
    using block = std::array<std::uint32_t, 4>;
    static block generate(block counter, std::array<std::uint32_t, 2> key);
};

// Purpose tags keep substreams of different consumers disjoint.
enum class StreamTag : std::uint64_t {
    initial = 1,
    resample = 2,
    propagate = 3,
    backward = 4,
    synth_path = 5,
    synth_obs = 6,
    forecast = 7,
    replicate = 8,
};

// Mixes a sequence of integers into a stream id (splitmix64 chaining).
std::uint64_t mix_stream_id(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                            std::uint64_t d = 0);

// Seed plus an epoch (EM iteration, replication, retry...). Cheap to copy.
struct RngKey {
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0;

    RngKey child(std::uint64_t index) const { return {seed, mix_stream_id(epoch, index, 0x9e37)}; }
};

// One substream. Satisfies UniformRandomBitGenerator so it can drive the
// <random> distributions.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream(std::uint64_t seed, std::uint64_t stream_id);
    Stream(RngKey key, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    // Standard normal (Box-Muller, second variate cached).
    double normal();

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    Philox4x32::block buffer_{};
    int buffered_ = 0;  // 64-bit words left in buffer_
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hmmrates
