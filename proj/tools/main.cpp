#include <cstdio>

int main() {
    std::puts("torusfield (cli under construction)");
    return 0;
}
