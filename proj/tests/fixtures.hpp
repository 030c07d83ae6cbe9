#pragma once

#include <memory>

#include "combust/profile.hpp"
#include "combust/spectral.hpp"

namespace combust::testing {

/// Strong-detonation profile of the default configuration at s = 1.5, computed once per process.
inline std::shared_ptr<const Profile> dc_profile() {
    static const std::shared_ptr<const Profile> P = [] {
        const ProfileOutcome out = compute_strong_detonation(default_config(), 0.0, 1.5);
        if (!out.connected()) throw NumericalError("fixture profile: " + out.diagnostic);
        return std::make_shared<const Profile>(*out.profile);
    }();
    return P;
}

inline const SpectralProblem& dc_spectral() {
    static const SpectralProblem sp(dc_profile());
    return sp;
}

inline double rel(cd a, cd b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace combust::testing
