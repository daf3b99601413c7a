#pragma once

#include "kcf.hpp"
#include "model.hpp"
#include "sampling.hpp"

#include <cstdint>
#include <optional>

namespace ndsa {

// Small deterministic generator (splitmix64) so seeded runs reproduce across
// platforms; std::uniform_* distributions are implementation defined.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // inclusive bounds
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    Complex uniform_complex(double radius) {
        return Complex(uniform(-radius, radius), uniform(-radius, radius));
    }
};

// True iff the pencil is FCR at every lambda (KCF has only N and J blocks),
// cross-checked by rank sampling at 20 seeded random points.
bool oracle_fcr_everywhere(const Pencil& P, const ToleranceConfig& cfg);

// Textbook descriptor-system tests on the lumped system. Regularity is decided
// at M_x + 1 distinct points (plus any extras): a nonzero det(lambda E - A)
// has at most M_x roots.
bool oracle_regular(const LumpedDescriptor& lum, const ToleranceConfig& cfg,
                    const SampleConfig& samp = {});

// nullopt: the system is not regular, the observability test is inconclusive.
std::optional<bool> oracle_observable(const LumpedDescriptor& lum, const ToleranceConfig& cfg);
std::optional<bool> oracle_controllable(const LumpedDescriptor& lum, const ToleranceConfig& cfg);

struct DimRange {
    Index lo = 0;
    Index hi = 0;
};

struct RandomModelSpec {
    std::uint64_t seed = 0;
    DimRange n_subsystems{1, 3};
    DimRange m_x{1, 3};
    DimRange m_v{0, 2};
    DimRange m_z{0, 2};
    DimRange m_u{0, 2};
    DimRange m_y{0, 2};
    double scm_density = 0.5;
    double singular_e_prob = 0.3;
    ModelMode mode = ModelMode::numeric;
    DimRange lft_q{0, 2};  // LFT channel widths q1, q2, r1, r2
};

// Deterministic in the seed; resamples until the model validates and is
// well-posed, then fails with GenerationExhaustedError after 100 rejects.
NdsModel random_model(const RandomModelSpec& spec);

}  // namespace ndsa
