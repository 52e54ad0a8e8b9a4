#pragma once

#include "catch_amalgamated.hpp"

#include "mrrpa/casci.hpp"
#include "mrrpa/integrals.hpp"
#include "mrrpa/manifold.hpp"
#include "mrrpa/partition.hpp"

using Catch::Matchers::WithinAbs;

namespace test {

/// Every orbital active: the active Hamiltonian is h1 and the full ERI.
inline mrrpa::ActiveHamiltonian full_space(const mrrpa::IntegralSet &set) {
    return {set.norb(), set.h1(), set.dense_eri()};
}

inline double fci_ground(const mrrpa::IntegralSet &set, int nelec, int sz2) {
    return mrrpa::solve_sector(full_space(set), nelec, sz2).energies(0) + set.e_core();
}

struct Built {
    mrrpa::PartitionResult pr;
    mrrpa::ExcitationManifold man;
};

inline Built build(const mrrpa::IntegralSet &set, const mrrpa::OrbitalSpaces &spaces) {
    Built b{mrrpa::build_partition(set, spaces), {}};
    mrrpa::SectorSolution ground = b.pr.ground_sector;
    const auto sectors = mrrpa::solve_manifold_sectors(b.pr.partition, std::move(ground), 20000);
    b.man = mrrpa::build_manifold(b.pr.partition, sectors);
    return b;
}

inline double max_abs(const Eigen::MatrixXd &m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace test
