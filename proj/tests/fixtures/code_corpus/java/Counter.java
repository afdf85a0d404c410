import java.util.HashMap;
import java.util.Map;

public class Counter {
    public static void main(String[] args) {
        String text = "a b c a b a";
        Map<String, Integer> counts = new HashMap<>();
        for (String tok : text.split(" ")) {
            counts.merge(tok, 1, Integer::sum);
        }
        counts.forEach((k, v) -> System.out.println(k + ": " + v));
    }
}
