// Times the OpenMP batch EM/F1 kernel against the serial reference on a
// synthetic corpus and verifies both produce identical aggregates.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "sgic/eval.hpp"
#include "sgic/util.hpp"

namespace {

std::string random_sentence(sgic::Rng& rng, int max_words) {
    static const char* kWords[] = {"river",  "treaty", "novel",  "engine", "harbor",
                                   "meadow", "signal", "winter", "stadium", "border",
                                   "the",    "a",      "museum", "bridge", "capital"};
    const int n = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_words)));
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += kWords[rng.index(std::size(kWords))];
    }
    return out;
}

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n = 200000;
    if (argc > 1) n = std::stoul(argv[1]);

    sgic::Rng rng(20260823);
    std::vector<std::string> predictions(n);
    std::vector<std::vector<std::string>> golds(n);
    for (std::size_t i = 0; i < n; ++i) {
        predictions[i] = random_sentence(rng, 12);
        const std::size_t g = 1 + rng.index(3);
        for (std::size_t k = 0; k < g; ++k) golds[i].push_back(random_sentence(rng, 12));
        if (rng.uniform(0.0, 1.0) < 0.3) golds[i][0] = predictions[i];  // some exact hits
    }

    std::vector<sgic::PairMetrics> serial, parallel;
    const double t_serial =
        time_ms([&] { serial = sgic::batch_metrics_serial(predictions, golds); });
    const double t_parallel = time_ms([&] { parallel = sgic::batch_metrics(predictions, golds); });

    double em_s = 0, f1_s = 0, em_p = 0, f1_p = 0;
    for (std::size_t i = 0; i < n; ++i) {
        em_s += serial[i].em;
        f1_s += serial[i].f1;
        em_p += parallel[i].em;
        f1_p += parallel[i].f1;
    }

    std::printf("pairs:        %zu\n", n);
    std::printf("serial:       %9.2f ms   (EM %.4f  F1 %.4f)\n", t_serial, em_s / n, f1_s / n);
    std::printf("parallel:     %9.2f ms   (EM %.4f  F1 %.4f)\n", t_parallel, em_p / n, f1_p / n);
    std::printf("speedup:      %9.2fx\n", t_serial / t_parallel);

    const bool same = em_s == em_p && f1_s == f1_p;
    std::printf("aggregates:   %s\n", same ? "identical" : "MISMATCH");
    return same ? 0 : 1;
}
