// Placeholder main; the full subcommand driver lands with the harness module.
int main() { return 0; }
