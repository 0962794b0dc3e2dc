#include "hrq/rng.hpp"

namespace hrq {

namespace {

// FNV-1a over the name, then SplitMix64 finalization to spread the bits.
uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

uint64_t derive_seed(uint64_t root, std::string_view stream_name) {
    return splitmix64(root ^ fnv1a(stream_name));
}

uint64_t derive_seed(uint64_t root, std::string_view stream_name, uint64_t index) {
    return splitmix64(derive_seed(root, stream_name) + 0x632be59bd9b4e019ull * (index + 1));
}

} // namespace hrq
