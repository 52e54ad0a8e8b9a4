#pragma once

// Curated systems shared by the unit, acceptance and self tests.
//
// Lattice fixtures are expressed in the eigenbasis of the hopping matrix so
// that the core / active / virtual split follows the one-electron energies.

#include "mrrpa/integrals.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace mrrpa::testing {

/// A reference value and where it comes from.
struct Expected {
    std::string quantity;
    double value = 0.0;
    std::string source;
};

struct Fixture {
    std::string name;
    IntegralSet integrals;
    OrbitalSpaces spaces;
    bool closed_shell_sr = false;
    std::vector<Expected> expected;

    std::optional<double> expect(const std::string &quantity) const {
        for (const auto &e : expected)
            if (e.quantity == quantity)
                return e.value;
        return std::nullopt;
    }
};

/// Two orbitals, one electron: a single active->virtual excitation with
/// omega = 1 and coupling v d^2 = 0.2, i.e. A = 1.2, B = 0.2.
inline Fixture scalar_model() {
    IntegralSet set(2, 1, 1);
    set.set_h(0, 0, 0.0);
    // eps_1 = h_11 + (11|00) - 1/2 (10|01) = 1.1 - 0.1
    set.set_h(1, 1, 1.1);
    set.set_eri(1, 0, 1, 0, 0.2);
    const double a = 1.2, b = 0.2;
    return {"scalar",
            set,
            {{}, {0}, {1}, 1},
            false,
            {{"omega_rpa", std::sqrt(a * a - b * b), "closed form sqrt(a^2 - b^2)"},
             {"de_rpa", 0.5 * (std::sqrt(a * a - b * b) - a), "closed form 1/2 (Omega - a)"},
             {"T", (-a + std::sqrt(a * a - b * b)) / b, "root of b + 2 a T + b T^2 = 0"},
             {"ring2", -b * b / 4.0, "-b^2 / (4 omega), omega = 1"},
             {"de_sosex", 0.0, "one electron: exchange cancels the direct ring"}}};
}

inline Fixture hubbard_chain_mo(std::string name, int nsite, double t, double U,
                                std::vector<int> core, std::vector<int> active,
                                std::vector<int> virt, int n_active_electrons,
                                std::optional<int> nelec = std::nullopt) {
    IntegralSet set = to_one_body_eigenbasis(hubbard_model(nsite, t, U, false, nelec));
    const bool sr = active.empty();
    return {std::move(name), std::move(set),
            {std::move(core), std::move(active), std::move(virt), n_active_electrons}, sr};
}

/// Hubbard dimer, t = 1, U = 4, bonding orbital doubly occupied.
inline Fixture hubbard_dimer_sr() {
    Fixture f = hubbard_chain_mo("hubbard2_sr", 2, 1.0, 4.0, {0}, {}, {1}, 0);
    // eps_b = -t, (bb|bb) = U/2
    f.expected = {{"e_casci", 0.0, "closed form 2 eps_b + (bb|bb) = -2t + U/2"},
                  {"e_fci", 2.0 - std::sqrt(8.0), "closed form U/2 - sqrt(U^2/4 + 4t^2)"}};
    return f;
}

inline Fixture hubbard4_sr() {
    return hubbard_chain_mo("hubbard4_sr", 4, 1.0, 2.0, {0, 1}, {}, {2, 3}, 0);
}

inline Fixture hubbard6_sr() {
    return hubbard_chain_mo("hubbard6_sr", 6, 1.0, 2.0, {0, 1, 2}, {}, {3, 4, 5}, 0);
}

/// Four-site open chain, CAS(2,2) over the two frontier orbitals.
inline Fixture hubbard4_cas22() {
    return hubbard_chain_mo("hubbard4_cas22", 4, 1.0, 2.0, {0}, {1, 2}, {3}, 2);
}

/// Six-site open chain, CAS(2,2) over the two frontier orbitals.
inline Fixture hubbard6_cas22() {
    return hubbard_chain_mo("hubbard6_cas22", 6, 1.0, 2.0, {0, 1}, {2, 3}, {4, 5}, 2);
}

/// Dimer fragment with its bonding orbital active: CAS(2,1).
inline Fixture dimer_fragment() {
    return hubbard_chain_mo("dimer_fragment", 2, 1.0, 4.0, {}, {0}, {1}, 2);
}

/// Two non-interacting dimer fragments; the active space is the union of the
/// fragment bonding orbitals.
inline Fixture dimer_pair() {
    const Fixture a = dimer_fragment();
    return {"dimer_pair", compose_noninteracting(a.integrals, a.integrals), {{}, {0, 2}, {1, 3}, 4},
            false};
}

/// Two non-interacting four-site CAS(2,2) fragments.
inline Fixture hubbard4_pair() {
    const Fixture a = hubbard4_cas22();
    return {"hubbard4_pair", compose_noninteracting(a.integrals, a.integrals),
            {{0, 4}, {1, 2, 5, 6}, {3, 7}, 4}, false};
}

/// Closed-shell dimer pair for the single-reference checks.
inline Fixture dimer_pair_sr() {
    const Fixture a = hubbard_dimer_sr();
    return {"dimer_pair_sr", compose_noninteracting(a.integrals, a.integrals), {{0, 2}, {}, {1, 3}, 0},
            true};
}

/// One electron on a three-site chain, lowest orbital active.
inline Fixture one_electron_chain() {
    Fixture f = hubbard_chain_mo("one_electron3", 3, 1.0, 2.0, {}, {0}, {1, 2}, 1, 1);
    f.expected = {{"de_sosex", 0.0, "one electron: exchange cancels the direct ring"}};
    return f;
}

/// All orbitals active: the residual two-body interaction vanishes.
inline Fixture hubbard4_full_cas() {
    Fixture f = hubbard_chain_mo("hubbard4_fullcas", 4, 1.0, 2.0, {}, {0, 1, 2, 3}, {}, 4);
    f.expected = {{"de_rpa", 0.0, "no residual two-body interaction"},
                  {"de_sosex", 0.0, "no residual two-body interaction"}};
    return f;
}

/// Every fixture the cross-formula checks run on.
inline std::vector<Fixture> cross_formula_fixtures() {
    return {scalar_model(), hubbard_dimer_sr(), hubbard4_cas22(), hubbard6_cas22(), dimer_pair()};
}

inline std::vector<Fixture> sr_fixtures() {
    return {hubbard_dimer_sr(), hubbard4_sr(), hubbard6_sr(), dimer_pair_sr()};
}

inline std::vector<Fixture> all_fixtures() {
    return {scalar_model(),   hubbard_dimer_sr(), hubbard4_sr(),        hubbard6_sr(),
            hubbard4_cas22(), hubbard6_cas22(),   dimer_fragment(),     dimer_pair(),
            hubbard4_pair(),  dimer_pair_sr(),    one_electron_chain(), hubbard4_full_cas()};
}

} // namespace mrrpa::testing
