// Minimal library usage: run SCGM on a two-dimensional capped-l1/tanh problem
// and print the certificate at the sampled output index.

#include <cstdio>

#include "composopt/certify.hpp"
#include "composopt/maps.hpp"
#include "composopt/outer.hpp"
#include "composopt/scgm.hpp"

int main() {
  using namespace composopt;
  Vec b(2), x1(2);
  b << 0.3, -0.2;
  x1 << 0.4, 0.6;
  const auto problem =
      make_compositional_problem(tanh_affine(Mat::Identity(2, 2), b), capped_abs_sum(2, 0.5));

  const ScgmParams p = derive_scgm_params(problem, x1, /*delta=*/0.2, /*epsilon=*/0.5);
  std::printf("mu = %.4g  gamma = %.4g  K = %zu\n", p.mu, p.gamma, p.K);

  const ScgmTrace trace = run_scgm(problem, p, x1, /*seed=*/1);
  const AuditReport audit = audit_trace_scgm(problem, trace);
  const ScgmState& out = trace.output();
  const ScgmCertificate cert = scgm_certificate(problem, trace.params, out.x, out.v);

  std::printf("tau = %zu  x = (%.6f, %.6f)\n", trace.tau, out.x(0), out.x(1));
  std::printf("radius = %.3g <= %.3g, residual = %.3g <= %.3g: %s\n", cert.radius, p.delta,
              cert.residual, p.epsilon, cert.valid(p.delta, p.epsilon) ? "valid" : "not valid");
  std::printf("audit: %s\n", audit.passed() ? "pass" : "fail");
  return audit.passed() && cert.valid(p.delta, p.epsilon) ? 0 : 1;
}
