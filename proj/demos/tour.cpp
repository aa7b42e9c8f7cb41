// Walks through the library on the measures in this directory.
#include <cstdio>
#include <string>

#include "gabdiv/gabdiv.hpp"

using namespace gabdiv;

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "demos";
    const Measure p = io::read_measure(dir + "/p.json");
    const Measure q = io::read_measure(dir + "/q.json");

    std::printf("divergences of P from Q\n");
    for (const char* spec : {"identity", "log", "power:2", "cdf-normal"})
        for (const Hyper& h : {Hyper(1, 1), Hyper(1, 0), Hyper(0.5, 0.5), Hyper(2, -1)}) {
            const auto d = gab(p, q, h, parse_psi(spec));
            std::printf("  %-11s (%4.1f, %4.1f) %-10s %.12f\n", spec, h.alpha(), h.beta(), to_string(d.regime),
                        d.value);
        }

    std::printf("\nKL closed form   %.12f\n", gab_special("KL", p, q));

    std::printf("\nentropy of P\n");
    for (const Hyper& h : {Hyper(1, 1), Hyper(0.5, 0.5), Hyper(-1, 3)})
        std::printf("  log (%4.1f, %4.1f) %.12f\n", h.alpha(), h.beta(), gabe(p, h, builtin("log")).value);

    const auto report = check_validity(builtin("cdf-exp"), Hyper(0.5, 0.5));
    std::printf("\ncdf-exp at (0.5, 0.5): %s\n", to_string(report.verdict));
    if (report.failed_condition) std::printf("  %s\n", report.failed_condition->c_str());

    const MaxEntSolution s = solve(io::read_problem(dir + "/problem.json"));
    std::printf("\nmaxent q = (%.10f, %.10f) after %d iterations\n", s.q(0), s.q(1), s.iterations);
    return 0;
}
