#include <benchmark/benchmark.h>

#include "planguard/retrieval.hpp"

namespace {

planguard::Constitution synthetic_constitution(int regulations) {
    const char* words[] = {"account", "password", "chemical", "label", "price",
                           "dose", "allergy", "container", "network", "order"};
    planguard::Constitution c;
    c.version = "bench";
    for (int i = 0; i < regulations; ++i) {
        planguard::Regulation r;
        r.id = "reg-" + std::to_string(i);
        r.scope = planguard::Scope::General;
        std::string text = "Always check the";
        for (int w = 0; w < 12; ++w) {
            text += ' ';
            text += words[(i * 7 + w * 3) % 10];
        }
        r.text = text;
        r.source = "bench";
        c.regulations.push_back(std::move(r));
    }
    return c;
}

void BM_BuildIndex(benchmark::State& state) {
    auto c = synthetic_constitution(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto index = planguard::build_index(c);
        benchmark::DoNotOptimize(index.corpus_size);
    }
}

void BM_Retrieve(benchmark::State& state) {
    auto c = synthetic_constitution(static_cast<int>(state.range(0)));
    auto index = planguard::build_index(c);
    planguard::RetrievalQuery q{"check the price of the order before the account"};
    for (auto _ : state) {
        auto hits = planguard::retrieve(index, q, 5);
        benchmark::DoNotOptimize(hits.size());
    }
}

}  // namespace

BENCHMARK(BM_BuildIndex)->Arg(20)->Arg(200);
BENCHMARK(BM_Retrieve)->Arg(20)->Arg(200);

BENCHMARK_MAIN();
