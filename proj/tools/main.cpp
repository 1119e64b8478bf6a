#include <iostream>

int main() {
    std::cout << "hydronet (placeholder)\n";
    return 0;
}
