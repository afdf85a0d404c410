package main

import (
	"encoding/json"
	"fmt"
)

type Point struct {
	X int `json:"x"`
	Y int `json:"y"`
}

func main() {
	pts := []Point{{1, 2}, {3, 4}}
	data, err := json.Marshal(pts)
	if err != nil {
		panic(err)
	}
	fmt.Println(string(data))

	var back []Point
	if err := json.Unmarshal(data, &back); err != nil {
		panic(err)
	}
	fmt.Println(back[1].X + back[1].Y)
}
