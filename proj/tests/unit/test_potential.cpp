#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <limits>

#include "abf/potential.hpp"
#include "abf/rng.hpp"
#include "helpers.hpp"

using namespace abf;

namespace {
const double kPi = two_pi / 2.0;
}

TEST_CASE("eval_potential closed forms") {
    const PotentialSpec zo = PotentialSpec::z_only(1.0);
    CHECK(eval_potential(zo, TorusPoint({2.31, 0.0}, 1)) == doctest::Approx(1.0).epsilon(1e-15));

    const PotentialSpec sep = PotentialSpec::separable(1.0, 2.0);
    CHECK(eval_potential(sep, TorusPoint({kPi, kPi}, 1)) == doctest::Approx(-3.0).epsilon(1e-15));

    const PotentialSpec cw = PotentialSpec::coupled_well(1.0, 1.0, 0.0);
    CHECK(eval_potential(cw, TorusPoint({0.0, kPi / 2.0}, 1)) == doctest::Approx(-1.0).epsilon(1e-14));

    CHECK_THROWS_AS(eval_potential(zo, TorusPoint({1.0, 2.0, 3.0}, 1)), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences at random points") {
    const CounterRng rng(19);
    const PotentialSpec specs[] = {
        PotentialSpec::z_only(1.3),
        PotentialSpec::separable(0.7, 1.9),
        PotentialSpec::coupled_well(2.0, 1.0, 0.5),
        PotentialSpec(PotentialFamily::coupled_well, 2.0, 1.0, 0.5, ProductExtension::extra_y, 0.8),
        PotentialSpec(PotentialFamily::coupled_well, 2.0, 1.0, 0.5, ProductExtension::extra_z, 0.8),
    };
    const double h = 1e-5;
    for (const auto& spec : specs) {
        const int d = spec.dim();
        const int m = spec.zdim();
        std::vector<double> c(static_cast<std::size_t>(d));
        std::vector<double> gy(static_cast<std::size_t>(d - m)), gz(static_cast<std::size_t>(m));
        for (int t = 0; t < 100; ++t) {
            for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = rng.uniform(1000 * t + i) * two_pi;
            spec.grad_y_at(c, gy);
            spec.grad_z_at(c, gz);
            for (int i = 0; i < d; ++i) {
                auto cp = c, cm = c;
                cp[static_cast<std::size_t>(i)] += h;
                cm[static_cast<std::size_t>(i)] -= h;
                const double fd = (spec.value_at(cp) - spec.value_at(cm)) / (2.0 * h);
                const double an =
                    i < d - m ? gy[static_cast<std::size_t>(i)] : gz[static_cast<std::size_t>(i - (d - m))];
                CHECK(std::fabs(fd - an) <= 1e-6);
            }
        }
    }
}

TEST_CASE("max_grad_z_norm is an attained supremum") {
    const CounterRng rng(29);
    const PotentialSpec specs[] = {
        PotentialSpec::z_only(1.3),
        PotentialSpec::coupled_well(2.0, 1.0, 0.5),
        PotentialSpec(PotentialFamily::coupled_well, 2.0, 1.0, 0.5, ProductExtension::extra_z, 0.8),
    };
    for (const auto& spec : specs) {
        const int d = spec.dim();
        const int m = spec.zdim();
        std::vector<double> c(static_cast<std::size_t>(d));
        std::vector<double> gz(static_cast<std::size_t>(m));
        const double bound = spec.max_grad_z_norm();
        double seen = 0.0;
        for (int t = 0; t < 200000; ++t) {
            for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = rng.uniform(static_cast<std::uint64_t>(t) * 4 + static_cast<std::uint64_t>(i)) * two_pi;
            spec.grad_z_at(c, gz);
            double sq = 0.0;
            for (double v : gz) sq += v * v;
            seen = std::max(seen, std::sqrt(sq));
        }
        CHECK(seen <= bound + 1e-12);
        CHECK(seen >= bound * (1.0 - 2e-3));
    }
}

TEST_CASE("free_energy_reference recovers analytic free energies") {
    PeriodicGrid g(1, 64);
    const FreeEnergyOracle zo = free_energy_reference(PotentialSpec::z_only(1.0), g, 64);
    const FreeEnergyOracle sep = free_energy_reference(PotentialSpec::separable(1.0, 1.0), g, 256);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = g.node_angle(static_cast<int>(i));
        CHECK(zo.a_star().value(i) == doctest::Approx(std::cos(z)).epsilon(1e-13));
        CHECK(zo.grad_a_star().value(0, i) == doctest::Approx(-std::sin(z)).epsilon(1e-13));
        // y-part factors into the additive constant, removed by centering
        CHECK(sep.a_star_centered().value(i) == doctest::Approx(std::cos(z)).epsilon(1e-10));
    }
    CHECK(std::fabs(zo.a_star_centered().mean()) <= 1e-14);
    CHECK_THROWS_AS(free_energy_reference(PotentialSpec::z_only(1.0), g, 16), std::invalid_argument);
}

TEST_CASE("oracle quadrature is spectrally converged in G_y") {
    PeriodicGrid g(1, 64);
    const PotentialSpec cw = PotentialSpec::coupled_well(1.0, 1.0, 0.0);
    const FreeEnergyOracle o1 = free_energy_reference(cw, g, 256);
    const FreeEnergyOracle o2 = free_energy_reference(cw, g, 512);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        worst = std::max(worst, std::fabs(o1.a_star().value(i) - o2.a_star().value(i)));
        worst = std::max(worst, std::fabs(o1.grad_a_star().value(0, i) - o2.grad_a_star().value(0, i)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("grad_a_star matches centered differences at second order") {
    const PotentialSpec cw = PotentialSpec::coupled_well(2.0, 1.0, 0.5);
    const auto fd_error = [&](int g_nodes) {
        PeriodicGrid g(1, g_nodes);
        const FreeEnergyOracle o = free_energy_reference(cw, g, 128);
        double worst = 0.0;
        const int G = g.nodes_per_dim();
        for (int i = 0; i < G; ++i) {
            const double fd = (o.a_star().value(static_cast<std::size_t>((i + 1) % G)) -
                               o.a_star().value(static_cast<std::size_t>((i - 1 + G) % G))) /
                              (2.0 * g.spacing());
            worst = std::max(worst, std::fabs(fd - o.grad_a_star().value(0, static_cast<std::size_t>(i))));
        }
        return worst;
    };
    const double ratio = fd_error(64) / fd_error(128);
    CHECK(ratio >= 3.0);
    CHECK(ratio <= 5.0);
}

TEST_CASE("free_energy_reference flags exp overflow") {
    PeriodicGrid g(1, 16);
    // V = -800 cos(z): e^{-V} overflows near z = 0
    CHECK_THROWS_AS(free_energy_reference(PotentialSpec::z_only(-800.0), g, 32), std::runtime_error);
}

TEST_CASE("mu_star_observable quadrature targets") {
    const PotentialSpec zo = PotentialSpec::z_only(1.0);
    const auto one = [](const TorusPoint&) { return 1.0; };
    CHECK(mu_star_observable(zo, one, 128) == doctest::Approx(1.0).epsilon(1e-14));

    const auto cos_z = [](const TorusPoint& x) { return std::cos(x.z()[0]); };
    const double bessel = -testhelp::bessel_i(1, 1.0) / testhelp::bessel_i(0, 1.0);
    CHECK(mu_star_observable(zo, cos_z, 512) == doctest::Approx(bessel).epsilon(1e-9));
    CHECK(bessel == doctest::Approx(-0.4463899658965).epsilon(1e-9));

    const auto sin_z = [](const TorusPoint& x) { return std::sin(x.z()[0]); };
    CHECK(std::fabs(mu_star_observable(zo, sin_z, 256)) <= 1e-14);
}

TEST_CASE("product extensions shift the free energy separably") {
    // extra_z: A_star(z1, z2) = A_base(z1) + coef cos(z2) + const
    const PotentialSpec base = PotentialSpec::coupled_well(1.0, 1.0, 0.3);
    const PotentialSpec ext(PotentialFamily::coupled_well, 1.0, 1.0, 0.3, ProductExtension::extra_z, 0.7);
    PeriodicGrid g1(1, 32);
    PeriodicGrid g2(2, 32);
    const FreeEnergyOracle ob = free_energy_reference(base, g1, 64);
    const FreeEnergyOracle oe = free_energy_reference(ext, g2, 64);
    std::vector<double> z(2);
    for (std::size_t i = 0; i < g2.size(); ++i) {
        g2.node(i, z);
        const std::size_t i1 = i / 32;  // z1 index (row-major, z2 fastest)
        const double expected = ob.a_star().value(i1) + 0.7 * std::cos(z[1]);
        CHECK(oe.a_star().value(i) == doctest::Approx(expected).epsilon(1e-12));
    }
}
