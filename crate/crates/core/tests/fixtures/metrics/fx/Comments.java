package fx;

/** Line counting around comments. */
public class Comments {
    int commented(int a, int b) {
        // leading comment

        int c = a; // trailing comment
        /* block
           comment */
        int d = b, e = a + b;
        /* inline */ c += d;
        return c + e; /* tail */
    }

    int nested(int a) {
        if (a > 0) {
            while (a > 10) {
                if (a % 2 == 0 || a % 3 == 0) {
                    a -= 3;
                } else {
                    a -= 1;
                }
            }
        }
        return a > 5 ? 1 : 0;
    }
}
