#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qconn/connections.hpp"
#include "qconn/errors.hpp"
#include "qconn/metric_geometry.hpp"
#include "support.hpp"

using namespace qconn;
using namespace qconn::testing;

namespace {

struct Fixture {
    ExpFamilyModel model = preset_model("pauli2");
    FramePtr frame = std::make_shared<GaugeFrame>(model, vec({0.3, 0.5}));
    ConnectionPtr m = make_m_connection(frame);
    ConnectionPtr dual = make_dual_connection(frame);
    ConnectionPtr alpha0 = make_alpha_connection(frame, 0.0);
    RealVector a = vec({0.1, 0.4}), b = vec({0.55, 0.2}), c = vec({0.35, 0.75});
};

ComplexMatrix eye(Index n) { return ComplexMatrix::Identity(n, n); }

}  // namespace

TEST_CASE("m-connection carries the wave vector and composes") {
    Fixture f;
    CurvePath ab = CurvePath::segment(f.a, f.b);
    ComplexMatrix pi = f.m->transport_matrix(ab, 0.0, 1.0);
    CHECK((pi * f.frame->omega(f.a) - f.frame->omega(f.b)).norm() < 1e-13);
    ComplexMatrix bc = f.m->transport_matrix(CurvePath::segment(f.b, f.c), 0.0, 1.0);
    ComplexMatrix ac = f.m->transport_matrix(CurvePath::segment(f.a, f.c), 0.0, 1.0);
    CHECK(max_abs(bc * pi - ac) < 1e-12);
    CHECK(max_abs(f.m->transport_matrix(ab, 0.4, 0.4) - eye(4)) < 1e-13);
    CHECK(max_abs(f.m->transport_matrix(ab, 1.0, 0.0) * pi - eye(4)) < 1e-12);
    CHECK(f.m->kind() == "m_connection");
}

TEST_CASE("dual transport follows the explicit adjoint formula") {
    Fixture f;
    CurvePath ab = CurvePath::segment(f.a, f.b);
    ComplexMatrix back = f.m->transport_matrix(ab, 1.0, 0.0);
    MetricOperator ta = f.frame->metric(f.a), tb = f.frame->metric(f.b);
    ComplexMatrix expect = tb.power(-2.0) * back.adjoint() * ta.power(2.0);
    DualConnection general(f.m, f.frame, false);
    CHECK(max_abs(general.transport_matrix(ab, 0.0, 1.0) - expect) < 1e-12);
    // with the m-connection as base the dual is the basis change, which is unitary
    ComplexMatrix u = f.dual->transport_matrix(ab, 0.0, 1.0);
    CHECK(max_abs(u - expect) < 1e-12);
    CHECK(max_abs(u * u.adjoint() - eye(4)) < 1e-12);
    GnsContext ca = f.frame->context(f.a), cb = f.frame->context(f.b);
    ComplexMatrix w = cb.basis * ca.basis.adjoint();
    CHECK(max_abs(u - kron(w, w)) < 1e-12);
}

TEST_CASE("alpha-family members act diagonally in the eigenbases") {
    Fixture f;
    CurvePath ab = CurvePath::segment(f.a, f.b);
    GnsContext ca = f.frame->context(f.a), cb = f.frame->context(f.b);
    ConnectionPtr alpha2 = make_alpha_connection(f.frame, 2.0);
    ComplexMatrix p0 = f.alpha0->transport_matrix(ab, 0.0, 1.0);
    ComplexMatrix p2 = alpha2->transport_matrix(ab, 0.0, 1.0);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j) {
            ComplexVector src = kron(ca.basis.col(i), ca.basis.col(j));
            ComplexVector dst = kron(cb.basis.col(i), cb.basis.col(j));
            double ratio = std::pow(cb.probs(i) / ca.probs(i), 0.25);
            CHECK((p0 * src - ratio * dst).norm() < 1e-12);
            CHECK((p2 * src - dst / ratio).norm() < 1e-12);
        }
    ConnectionPtr minus_one = make_alpha_connection(f.frame, -1.0);
    CHECK(max_abs(minus_one->transport_matrix(ab, 0.0, 1.0) - f.m->transport_matrix(ab, 0.0, 1.0)) < 1e-12);
    CHECK(f.alpha0->kind().rfind("alpha", 0) == 0);
}

TEST_CASE("pairing identities in the transported reading") {
    Fixture f;
    std::mt19937_64 rng(31);
    CurvePath ab = CurvePath::segment(f.a, f.b);
    GnsContext ca = f.frame->context(f.a);
    MetricOperator ta = f.frame->metric(f.a);
    TransportOperator pm = f.m->transport(ab, 0.0, 1.0), pd = f.dual->transport(ab, 0.0, 1.0),
                      p0 = f.alpha0->transport(ab, 0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        ComplexMatrix x = lift(random_matrix(rng, 2)), y = lift(random_matrix(rng, 2));
        Complex base = inner_product(ca, ta, x, y);
        CHECK(std::abs(transported_pairing(*f.frame, pm, pd, x, y) - base) < 1e-12);
        CHECK(std::abs(transported_pairing(*f.frame, p0, p0, x, y) - base) < 1e-12);
    }
}

TEST_CASE("commuting generators give a trivial dual transport") {
    ExpFamilyModel d = preset_model("diag2");
    auto frame = std::make_shared<GaugeFrame>(d, vec({0.2, -0.3}));
    ConnectionPtr dual = make_dual_connection(frame);
    CurvePath loop = CurvePath::rectangle(vec({0.2, -0.3}), 0, 1, 0.4, 0.7);
    CurvePath wide = CurvePath::segment(vec({-1.0, 2.0}), vec({1.5, 0.5}));
    CHECK(max_abs(dual->transport_matrix(loop, 0.0, 0.6) - eye(9)) < 1e-12);
    CHECK(max_abs(dual->transport_matrix(wide, 0.0, 1.0) - eye(9)) < 1e-12);
}

TEST_CASE("synthetic connection with constant commuting generators is an exponential") {
    std::mt19937_64 rng(32);
    ComplexMatrix q = random_matrix(rng, 3);
    Eigen::HouseholderQR<ComplexMatrix> qr(q);
    ComplexMatrix u = qr.householderQ();
    ComplexMatrix a0 = u * vec({0.3, -0.2, 1.1}).cast<Complex>().asDiagonal() * u.adjoint();
    ComplexMatrix a1 = u * vec({-0.5, 0.4, 0.2}).cast<Complex>().asDiagonal() * u.adjoint();
    SyntheticConnection syn([=](const ParameterPoint&) { return std::vector<ComplexMatrix>{a0, a1}; }, 3, 2.0);
    RealVector from = vec({0.1, 0.2}), to = vec({0.8, -0.4});
    ComplexMatrix pi = syn.transport_matrix(CurvePath::segment(from, to), 0.0, 1.0);
    RealVector d = to - from;
    CHECK(max_abs(pi - expm(Complex(0, -0.5) * (d(0) * a0 + d(1) * a1))) < 1e-12);
    CHECK(syn.unitary());
}

TEST_CASE("synthetic transport converges and stays unitary") {
    std::shared_ptr<SyntheticConnection> syn = SyntheticConnection::random(4, 2, 5);
    CurvePath path = CurvePath::composite({CurvePath::segment(vec({0.0, 0.0}), vec({0.6, 0.1})),
                                           CurvePath::segment(vec({0.6, 0.1}), vec({0.2, 0.9}))});
    ComplexMatrix pi = syn->transport_matrix(path, 0.0, 1.0);
    CHECK(max_abs(pi * pi.adjoint() - eye(4)) < 1e-12);
    ComplexMatrix split = syn->transport_matrix(path, 0.5, 1.0) * syn->transport_matrix(path, 0.0, 0.5);
    CHECK(max_abs(split - pi) < 1e-6);
    ComplexMatrix back = syn->transport_matrix(path, 1.0, 0.0);
    CHECK(max_abs(back * pi - eye(4)) < 1e-6);
    // a path-dependent transport: two routes between the same endpoints differ
    ComplexMatrix direct = syn->transport_matrix(CurvePath::segment(vec({0.0, 0.0}), vec({0.2, 0.9})), 0.0, 1.0);
    CHECK(max_abs(direct - pi) > 1e-3);
}

TEST_CASE("scalar gauge shift multiplies by a phase") {
    Fixture f;
    auto phi = [](const ParameterPoint& x) { return std::sin(2.0 * x(0)) + x(1) * x(1); };
    GaugeShiftedConnection shifted(f.dual, phi);
    CurvePath ab = CurvePath::segment(f.a, f.b);
    Complex phase = std::exp(Complex(0, phi(f.b) - phi(f.a)));
    CHECK(max_abs(shifted.transport_matrix(ab, 0.0, 1.0) - phase * f.dual->transport_matrix(ab, 0.0, 1.0)) < 1e-14);
}

TEST_CASE("lifted transport and factory errors") {
    Fixture f;
    std::mt19937_64 rng(33);
    TransportOperator pi = f.m->transport(CurvePath::segment(f.a, f.b), 0.0, 1.0);
    ComplexMatrix x = lift(random_matrix(rng, 2));
    ComplexMatrix moved = lift_transport(pi, x);
    CHECK(max_abs(moved * pi.matrix - pi.matrix * x) < 1e-12);
    CHECK_THROWS_AS(make_density_connection(f.frame, "e", 0.0), ConfigError);
}
