#pragma once

#include "mnm/mdp.hpp"

#include <cmath>

namespace mnm::testing {

/// Single state, single action, reward r.
inline TabularMdp single_state(double r, double discount) {
    TabularMdp m;
    m.transition = SASTable(1, 1, 1.0);
    m.reward = SATable(1, 1, r);
    m.initial = {1.0};
    m.discount = discount;
    return m;
}

/// Two states, one action: 0 -> 1 -> 1 deterministically.
inline TabularMdp absorbing_chain(double r0, double r1, double discount) {
    TabularMdp m;
    m.transition = SASTable(2, 1);
    m.transition(0, 0, 1) = 1.0;
    m.transition(1, 0, 1) = 1.0;
    m.reward = SATable(2, 1);
    m.reward(0, 0) = r0;
    m.reward(1, 0) = r1;
    m.initial = {1.0, 0.0};
    m.discount = discount;
    return m;
}

/// Two states, two actions: action a moves to state a.
inline TabularMdp two_state_switch(double r0, double r1, double discount) {
    TabularMdp m;
    m.transition = SASTable(2, 2);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a) m.transition(s, a, a) = 1.0;
    m.reward = SATable(2, 2);
    for (std::size_t a = 0; a < 2; ++a) {
        m.reward(0, a) = r0;
        m.reward(1, a) = r1;
    }
    m.initial = {1.0, 0.0};
    m.discount = discount;
    return m;
}

}  // namespace mnm::testing
