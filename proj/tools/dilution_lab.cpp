#include <cstdio>

int main() {
    std::puts("dilution-lab: not wired up yet");
    return 3;
}
