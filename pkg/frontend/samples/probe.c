/*
 * Prints the ABI constants as the compiler itself sees them, one
 * KEY=VALUE per line, so the host side can diff them against its
 * manifest. Run single-rank.
 */
#include <mpi.h>
#include <mwio.h>

int main(void) {
    if (MPI_Init(0, 0) != MPI_SUCCESS) return 1;

    print_kv("STATUS_SIZE", (int)sizeof(MPI_Status));
    print_kv("MPI_COMM_WORLD", MPI_COMM_WORLD);
    print_kv("MPI_COMM_SELF", MPI_COMM_SELF);
    print_kv("MPI_COMM_NULL", MPI_COMM_NULL);
    print_kv("MPI_BYTE", MPI_BYTE);
    print_kv("MPI_CHAR", MPI_CHAR);
    print_kv("MPI_INT", MPI_INT);
    print_kv("MPI_FLOAT", MPI_FLOAT);
    print_kv("MPI_DOUBLE", MPI_DOUBLE);
    print_kv("MPI_LONG", MPI_LONG);
    print_kv("MPI_UNSIGNED", MPI_UNSIGNED);
    print_kv("MPI_LONG_LONG", MPI_LONG_LONG);
    print_kv("MPI_UNSIGNED_LONG", MPI_UNSIGNED_LONG);
    print_kv("MPI_DATATYPE_NULL", MPI_DATATYPE_NULL);
    print_kv("MPI_SUM", MPI_SUM);
    print_kv("MPI_MAX", MPI_MAX);
    print_kv("MPI_MIN", MPI_MIN);
    print_kv("MPI_PROD", MPI_PROD);
    print_kv("MPI_LAND", MPI_LAND);
    print_kv("MPI_LOR", MPI_LOR);
    print_kv("MPI_BAND", MPI_BAND);
    print_kv("MPI_BOR", MPI_BOR);
    print_kv("MPI_OP_NULL", MPI_OP_NULL);
    print_kv("MPI_ANY_SOURCE", MPI_ANY_SOURCE);
    print_kv("MPI_ANY_TAG", MPI_ANY_TAG);
    print_kv("MPI_REQUEST_NULL", MPI_REQUEST_NULL);
    print_kv("MPI_UNDEFINED", MPI_UNDEFINED);
    print_kv("MPI_SUCCESS", MPI_SUCCESS);
    print_kv("MPI_ERR_TYPE", MPI_ERR_TYPE);
    print_kv("MPI_ERR_COMM", MPI_ERR_COMM);
    print_kv("MPI_ERR_OP", MPI_ERR_OP);
    print_kv("MPI_ERR_ARG", MPI_ERR_ARG);
    print_kv("MPI_ERR_OTHER", MPI_ERR_OTHER);

    return MPI_Finalize() == MPI_SUCCESS ? 0 : 2;
}
